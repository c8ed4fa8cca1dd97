train_full_fraction = 0.8
validation_fraction = 0.1

# Available options: "balance-first" (label -> oversample -> split), "split-first" (split -> oversample train)
pipeline_order = "balance-first"
pipeline_orders = ("balance-first", "split-first")

default_seed = 42

# three classes, at least this many rows each before a split can be stratified
min_rows_per_class = 3
