# Regenerates reference_spans.json from CPython's own `ast` module.
#
# For every snippet, records the (kind, label, start, end) of each statement
# node and each Name / Call / Attribute node, sorted. The Rust test compares
# the same projection of the toolkit's trees against this frozen output.
import ast
import json
import pathlib

here = pathlib.Path(__file__).parent
out = {}
for path in sorted((here / "snippets").glob("*.py")):
    tree = ast.parse(path.read_text())
    rows = []
    for node in ast.walk(tree):
        if isinstance(node, ast.stmt):
            kind = type(node).__name__
            label = getattr(node, "name", None) if kind in ("FunctionDef", "ClassDef") else None
        elif isinstance(node, ast.Name):
            kind, label = "Name", node.id
        elif isinstance(node, ast.Attribute):
            kind, label = "Attribute", node.attr
        elif isinstance(node, ast.Call):
            kind, label = "Call", None
        else:
            continue
        rows.append([kind, label, node.lineno, node.end_lineno])
    rows.sort(key=lambda r: (r[2], r[3], r[0], r[1] or ""))
    out[path.name] = rows
lines = ["{"]
for i, (name, rows) in enumerate(out.items()):
    lines.append(f" {json.dumps(name)}: [")
    lines.extend("  " + json.dumps(r) + ("," if j + 1 < len(rows) else "") for j, r in enumerate(rows))
    lines.append(" ]" + ("," if i + 1 < len(out) else ""))
lines.append("}")
(here / "reference_spans.json").write_text("\n".join(lines) + "\n")
