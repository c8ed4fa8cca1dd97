package_version = "1.0.0"

# environment overrides, read through python-dotenv
output_dir_env = "REVIEW_SENTIMENT_OUT"
log_level_env = "REVIEW_SENTIMENT_LOG_LEVEL"

reviews_file = "reviews.csv"
labeled_file = "labeled.csv"
balanced_file = "balanced.csv"
splits_dir = "splits"
train_balanced_file = "train_balanced.csv"
split_manifest_file = "split_manifest.tsv"
vocab_file = "vocab.tsv"
encoded_dir = "encoded"
models_dir = "models"
reports_dir = "reports"
eda_dir = "eda"
manifest_file = "manifest.jsonl"

split_names = ("train", "val", "test")
