use super::*;

const DEDENT_BUGGY: &str = include_str!("../../tests/fixtures/snippets/dedent_buggy.py");

fn kinds(node: &TreeNode) -> Vec<&str> {
    node.children.iter().map(|c| c.kind.as_str()).collect()
}

#[test]
fn single_assignment() {
    let tree = parse_source("x = 1").unwrap();
    assert_eq!(tree.kind, "Module");
    assert_eq!((tree.start_line, tree.end_line), (1, 1));
    let assign = &tree.children[0];
    assert_eq!(kinds(assign), ["Name", "Constant"]);
    assert_eq!(assign.children[0].label.as_deref(), Some("x"));
    assert_eq!(assign.children[1].label.as_deref(), Some("1"));
}

#[test]
fn malformed_header_fails_on_line_one() {
    let err = parse_source("def f(:").unwrap_err();
    assert_eq!(err.line, 1);
}

#[test]
fn loop_body_owns_the_indented_call() {
    let tree = parse_source(DEDENT_BUGGY).unwrap();
    let func = &tree.children[0];
    assert_eq!((func.kind.as_str(), func.label.as_deref()), ("FunctionDef", Some("get_names")));
    let for_node = func.children.iter().find(|c| c.kind == "For").unwrap();
    assert_eq!((for_node.start_line, for_node.end_line), (3, 5));
    let expr = for_node.children.iter().find(|c| c.kind == "Expr").unwrap();
    assert_eq!(expr.start_line, 5);
    assert_eq!(expr.children[0].kind, "Call");
    assert_eq!(expr.children[0].children[0].label.as_deref(), Some("sanitize"));
}

#[test]
fn comments_and_blank_lines_produce_no_nodes() {
    let plain = parse_source("a = 1\nb = 2\n").unwrap();
    let noisy = parse_source("# header\na = 1\n\n   # note\nb = 2  # trailing\n").unwrap();
    assert_eq!(plain.size(), noisy.size());
    assert_eq!(noisy.children[1].start_line, 5);
}

#[test]
fn multi_line_expression_spans_all_lines() {
    let tree = parse_source("total = add(\n    1,\n    2,\n)\n").unwrap();
    let assign = &tree.children[0];
    assert_eq!((assign.start_line, assign.end_line), (1, 4));
    assert_eq!(assign.children[1].kind, "Call");
    assert_eq!(assign.children[1].end_line, 4);
}

#[test]
fn unsupported_constructs_are_rejected() {
    for src in ["@dec\ndef f():\n    pass\n", "f = lambda x: x\n", "y = [i for i in x]\n", "async def f():\n    pass\n"] {
        assert!(parse_source(src).is_err(), "{src:?}");
    }
}

#[test]
fn every_tree_is_valid() {
    for src in [DEDENT_BUGGY, "if a:\n    b()\nelif c:\n    d = 1\nelse:\n    pass\n", "class A(B):\n    x: int = 3\n"] {
        parse_source(src).unwrap().validate().unwrap();
    }
}

#[test]
fn tree_document_examples() {
    let t = parse_tree_document(r#"{"kind":"Module","span":[1,1],"children":[{"kind":"Pass","span":[1,1]}]}"#).unwrap();
    assert_eq!(t.to_string(), "Module[1..1]{ Pass[1..1] }");
    let bad = r#"{"kind":"Module","span":[1,1],"children":[{"kind":"Pass","span":[1,2]}]}"#;
    assert!(parse_tree_document(bad).is_err());
    let unknown = r#"{"kind":"Module","span":[1,1],"colour":"red"}"#;
    assert!(parse_tree_document(unknown).is_err());
    let unordered = r#"{"kind":"Module","span":[1,3],"children":[{"kind":"Pass","span":[3,3]},{"kind":"Pass","span":[1,1]}]}"#;
    assert!(parse_tree_document(unordered).is_err());
}

#[test]
fn parsed_trees_round_trip_through_documents() {
    for src in ["x = 1", DEDENT_BUGGY, include_str!("../../tests/fixtures/snippets/exceptions.py")] {
        let tree = parse_source(src).unwrap();
        let text = serialize_tree(&tree);
        assert_eq!(parse_tree_document(&text).unwrap(), tree);
        assert_eq!(serialize_tree(&parse_source(src).unwrap()), text);
    }
}

#[test]
fn unclosed_bracket_reports_its_opening_line() {
    let err = parse_source("x = 1\ndef f(:\n    pass\n").unwrap_err();
    assert_eq!(err.line, 2);
    assert!(err.message.contains("never closed"), "{}", err.message);
    assert_eq!(parse_source("y = [1,\n  (2,\n").unwrap_err().line, 2);
}
