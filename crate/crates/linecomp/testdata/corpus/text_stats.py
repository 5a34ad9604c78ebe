import re

def word_counts(text):
    counts = {}
    for word in text.split():
        cleaned = word.strip(".,;:").lower()
        if not cleaned:
            continue
        counts[cleaned] = counts.get(cleaned, 0) + 1
    return counts

def top_words(counts, limit):
    pairs = [(count, word) for (word, count) in counts.items()]
    pairs.sort(reverse=True)
    return pairs[:limit]

def summarize(text, limit=5):
    counts = word_counts(text)
    total = sum(counts.values())
    top = top_words(counts, limit)
    print("total words:", total)
    for (count, word) in top:
        print(word, count)
    return total
