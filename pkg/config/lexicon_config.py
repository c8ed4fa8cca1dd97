# polarity above pos_threshold is Positive, below neg_threshold is Negative, both bounds are Neutral
pos_threshold = 0.1
neg_threshold = -0.1

# a matched word directly after a negator contributes polarity * negation_factor
negation_factor = -0.5

comment_prefix = "#"
negator_marker = "!negator"
