def foo(a):
    b = -1
    for c in range(len(a)):
        if a[c] == 0:
            b = c
    return b
