def overlaps(a, b):
    return a[0] <= b[1] and b[0] <= a[1]

def merge_pair(a, b):
    low = min(a[0], b[0])
    high = max(a[1], b[1])
    return (low, high)

def merge_all(intervals):
    if not intervals:
        return []
    ordered = sorted(intervals)
    merged = [ordered[0]]
    for span in ordered[1:]:
        last = merged[-1]
        if overlaps(last, span):
            merged[-1] = merge_pair(last, span)
        else:
            merged.append(span)
    return merged

def width(span):
    return span[1] - span[0]

def covered(intervals):
    total = 0
    for span in merge_all(intervals):
        total += width(span)
    return total

def is_point(span):
    return span[0] == span[1]

def disjoint(a, b):
    return not overlaps(a, b)
