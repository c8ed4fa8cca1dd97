max_words = 5000

# the longest review kept, in tokens; post-padding and post-truncation
max_length = 100

pad_index = 0
oov_index = 1

pad_token = "<PAD>"
oov_token = "<OOV>"
