def foo(a):
    b = 0
    for c in a:
        if c % 2 == 0:
            b += 1
    return b
