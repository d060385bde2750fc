def foo(leaves, steps):
    position = 0
    eaten = leaves[0]
    for step in steps:
        position += step
        if position >= len(leaves):
            break
        eaten += leaves[position]
    return eaten
