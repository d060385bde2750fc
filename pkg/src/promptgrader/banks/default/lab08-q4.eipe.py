def foo(a):
    b = 0
    for c in a:
        if c > 0:
            b += c
    return b
