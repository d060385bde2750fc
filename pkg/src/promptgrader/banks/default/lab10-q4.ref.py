def foo(text, part):
    for start in range(len(text) - len(part) + 1):
        if text[start:start + len(part)] == part:
            return True
    return False
