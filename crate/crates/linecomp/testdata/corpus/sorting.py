def insertion_sort(values):
    for index in range(1, len(values)):
        probe = index
        while probe > 0 and values[probe - 1] > values[probe]:
            values[probe - 1], values[probe] = values[probe], values[probe - 1]
            probe -= 1
    return values

def merge(left, right):
    merged = []
    i = 0
    j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged

def demo():
    my_list = [3, 1, 2]
    my_list.sort(reverse=False)
    return my_list
