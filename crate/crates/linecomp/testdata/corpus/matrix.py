def identity(n):
    rows = []
    for i in range(n):
        row = [0] * n
        row[i] = 1
        rows.append(row)
    return rows

def transpose(matrix):
    height = len(matrix)
    width = len(matrix[0])
    out = []
    for c in range(width):
        col = [matrix[r][c] for r in range(height)]
        out.append(col)
    return out

def row_slice(matrix, start, stop):
    return matrix[start:stop]

def every_other(row):
    return row[::2]

def tail(row, k):
    return row[-k:]

def drop_row(matrix, index):
    del matrix[index]
    return matrix

def scale(matrix, factor):
    return [[cell * factor for cell in row] for row in matrix]

def diagonal(matrix):
    n = len(matrix)
    return [matrix[i][i] for i in range(n)]
