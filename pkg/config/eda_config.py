top_k = 20

# only applied when the stop-list flag is given
stop_words = frozenset([
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "i", "if", "in", "is", "it", "its", "me",
    "my", "of", "on", "or", "so", "that", "the", "this", "to", "was", "were", "with", "you", "your",
])
