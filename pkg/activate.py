import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from components.corpus_system import ColumnMap
from components.pipeline_system import RunConfig, read_config_file, run_stage, with_overrides, stage_map
from config.dataprep_config import pipeline_orders
from config.logging_config import log_file_name
from config.model_config import model_kinds
from config.pipeline_config import output_dir_env
from utils.exceptions import ReviewSentimentError
from utils.logging_system import activate_logging_system

logger = logging.getLogger(__name__)


def _common_arguments():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", action="append", default=None,
                        help="Review export to ingest, repeat for several apps")
    common.add_argument("--app-id", action="append", default=None,
                        help="App identifier for the matching --input, in the same order")
    common.add_argument("--lexicon", help="Tab-separated polarity lexicon")
    common.add_argument("--out", help=f"Output directory (env {output_dir_env})")
    common.add_argument("--seed", type=int, help="Seed for every random choice")
    common.add_argument("--model", choices=model_kinds, help="Train or evaluate only this architecture")
    common.add_argument("--max-length", type=int, help="Padded sequence length")
    common.add_argument("--epochs", type=int, help="Maximum training epochs")
    common.add_argument("--batch-size", type=int, help="Mini-batch size")
    common.add_argument("--patience", type=int, help="Early-stopping patience, 0 disables")
    common.add_argument("--pooling", choices=("last", "max"), help="Bi-LSTM sequence pooling")
    common.add_argument("--split-first", action="store_true", default=None,
                        help="Split before oversampling and balance only the train split")
    common.add_argument("--top-k", type=int, help="Words per app in the EDA frequency table")
    common.add_argument("--stop-words", action="store_true", default=None,
                        help="Drop common stop words from EDA frequency tables")
    common.add_argument("--text-column", help="Column holding the review text")
    common.add_argument("--rating-column", help="Column holding the star rating")
    common.add_argument("--time-column", help="Column holding the review timestamp")
    common.add_argument("--id-column", help="Column holding the review id")
    common.add_argument("--config", help="key=value file with defaults for the options above")
    common.add_argument("--log-level", help="debug, info, warning, error or critical")
    common.add_argument("--progress", action="store_true", help="Show a progress bar while training")
    return common


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(description="Label, balance, split, train on and report app review sentiment.")
    subparsers = parser.add_subparsers(dest="stage", required=True)
    common = _common_arguments()
    for stage in stage_map:
        subparsers.add_parser(stage, parents=[common], help=f"Run the {stage} stage")
    return parser.parse_args(argv)


def build_run_config(args):
    """
    Resolve a RunConfig: config constants, then the --config file, then the environment, then flags.
    """
    config = RunConfig()
    if args.config:
        config = with_overrides(config, **read_config_file(args.config))
    config = with_overrides(config, out=os.getenv(output_dir_env) or None)

    inputs = None
    if args.input:
        app_ids = args.app_id or []
        if len(app_ids) != len(args.input):
            raise ValueError(f"Got {len(args.input)} --input but {len(app_ids)} --app-id values")
        inputs = tuple(zip(args.input, app_ids))

    column_flags = {'text': args.text_column, 'rating': args.rating_column, 'timestamp': args.time_column,
                    'review_id': args.id_column}
    columns = None
    if any(column_flags.values()):
        defaults = ColumnMap()
        columns = ColumnMap(**{name: value or getattr(defaults, name) for name, value in column_flags.items()})

    return with_overrides(config,
                          inputs=inputs,
                          lexicon=args.lexicon,
                          out=args.out,
                          seed=args.seed,
                          order=pipeline_orders[1] if args.split_first else None,
                          columns=columns,
                          models=(args.model,) if args.model else None,
                          max_length=args.max_length,
                          epochs=args.epochs,
                          batch_size=args.batch_size,
                          patience=args.patience,
                          bilstm_pooling=args.pooling,
                          top_k=args.top_k,
                          use_stop_words=args.stop_words,
                          show_progress=args.progress or None)


def main(argv=None):
    load_dotenv()
    args = parse_arguments(argv)

    try:
        activate_logging_system(args.log_level)
        config = build_run_config(args)
    except (ValueError, FileNotFoundError) as err:
        logger.error(f"[{args.stage}] {err}")
        return 2

    activate_logging_system(args.log_level, log_file=config.path(log_file_name))
    logger.debug(f"Running {args.stage} with {config}")

    try:
        run_stage(args.stage, config)
    except ReviewSentimentError as err:
        message = str(err) if str(err).startswith('[') else f"[{args.stage}] {err}"
        logger.error(message)
        return 1
    except (FileNotFoundError, ValueError) as err:
        logger.error(f"[{args.stage}] {err}")
        return 1

    logger.info(f"{args.stage} complete, artifacts in {config.out}")
    return 0


if __name__ == '__main__':
    sys.exit(main())
