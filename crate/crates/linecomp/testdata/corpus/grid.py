def make_grid(rows, cols, fill=0):
    grid = []
    for r in range(rows):
        row = []
        for c in range(cols):
            row.append(fill)
        grid.append(row)
    return grid

def neighbors(grid, r, c):
    out = []
    for dr, dc in [(-1, 0), (1, 0), (0, -1), (0, 1)]:
        nr = r + dr
        nc = c + dc
        if nr < 0 or nc < 0:
            continue
        if nr >= len(grid) or nc >= len(grid[0]):
            continue
        out.append(grid[nr][nc])
    return out

def classify(cell):
    if cell is None:
        return "empty"
    elif cell == 0:
        return "clear"
    elif cell > 0 and cell < 10:
        return "low"
    else:
        return "high"

def contains(grid, needle):
    for row in grid:
        if needle in row:
            return True
    return False
