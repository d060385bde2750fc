def foo(values):
    position = -1
    for index in range(len(values)):
        if values[index] == 0:
            position = index
    return position
