import os

def iter_lines(path):
    with open(path) as handle:
        for line in handle:
            stripped = line.strip()
            if not stripped:
                continue
            yield stripped

def count_lines(path):
    total = 0
    for line in iter_lines(path):
        total += 1
    return total

def list_files(root):
    names = os.listdir(root)
    names.sort()
    out = []
    for name in names:
        full = os.path.join(root, name)
        if os.path.isdir(full):
            continue
        out.append(full)
    return out

def first_match(path, needle):
    for line in iter_lines(path):
        if needle in line:
            return line
    return None
