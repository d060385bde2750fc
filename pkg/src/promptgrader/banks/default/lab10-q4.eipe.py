def foo(a, b):
    for c in range(len(a) - len(b) + 1):
        if a[c:c + len(b)] == b:
            return True
    return False
