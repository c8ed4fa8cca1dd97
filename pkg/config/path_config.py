from pathlib import Path

top_dir = Path(__file__).parent.parent

default_output_dir = top_dir / 'output'

fixtures_dir = top_dir / 'tests' / 'fixtures'

starter_lexicon_path = fixtures_dir / 'starter_lexicon.tsv'

chatgpt_fixture_path = fixtures_dir / 'chatgpt_reviews.csv'
deepseek_fixture_path = fixtures_dir / 'deepseek_reviews.csv'
