def get_names(names):
    name_str = ''
    for name in names:
        name_str += name
        sanitize(name_str)
    return name_str
