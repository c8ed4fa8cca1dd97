import argparse
import logging
import sys
from pathlib import Path

top_dir = Path(__file__).parent.parent

sys.path.append(str(top_dir))
from config.path_config import default_output_dir
from utils.logging_system import activate_logging_system
from utils.synthetic_corpus import generate_reviews, write_export, write_starter_lexicon

activate_logging_system()
logger = logging.getLogger(__name__)

parser = argparse.ArgumentParser(description="Write the synthetic benchmark corpus and its starter lexicon.")
parser.add_argument("--out", type=str, default=str(default_output_dir / 'synthetic'),
                    help="Directory for synthetic_reviews.csv and starter_lexicon.tsv.")
parser.add_argument("--reviews", type=int, default=900, help="Number of reviews to generate. Defaults to 900.")
parser.add_argument("--seed", type=int, default=0, help="Generator seed. Defaults to 0.")

args = parser.parse_args()

out_dir = Path(args.out)
export_path = write_export(generate_reviews(args.reviews, args.seed), out_dir / 'synthetic_reviews.csv')
lexicon_path = write_starter_lexicon(out_dir / 'starter_lexicon.tsv')

logger.info(f"Wrote {args.reviews} reviews to {export_path} and the lexicon to {lexicon_path}")
print(f"python activate.py run-all --input {export_path} --app-id synthetic --lexicon {lexicon_path} "
      f"--out {out_dir / 'run'}")
