import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

top_dir = Path(__file__).parent.parent

sys.path.append(str(top_dir))
from components.lexicon_system import SentimentLabel, Lexicon, LabelRule, load_lexicon, score_text, assign_label
from config.path_config import starter_lexicon_path
from utils.exceptions import LexiconParseError
from utils.synthetic_corpus import POSITIVE_WORDS, NEGATIVE_WORDS, NEGATORS, starter_lexicon_text


class TestLoadLexicon(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, content):
        path = self.dir / "lexicon.tsv"
        path.write_text(content, encoding="utf-8")
        return path

    def test_two_entries(self):
        lex = load_lexicon(self._write("good\t0.7\nbad\t-0.7\n"))
        self.assertEqual(len(lex), 2)
        self.assertEqual(dict(lex.entries), {"good": 0.7, "bad": -0.7})

    def test_out_of_range_cites_line(self):
        with self.assertRaises(LexiconParseError) as ctx:
            load_lexicon(self._write("# header\ngood\t0.7\ngreat\t1.5\n"))
        self.assertEqual(ctx.exception.line_number, 3)
        self.assertIn("line 3", str(ctx.exception))

    def test_malformed_line(self):
        with self.assertRaises(LexiconParseError) as ctx:
            load_lexicon(self._write("good 0.7\n"))
        self.assertEqual(ctx.exception.line_number, 1)
        with self.assertRaises(LexiconParseError):
            load_lexicon(self._write("good\tvery\n"))

    def test_empty_file(self):
        lex = load_lexicon(self._write(""))
        self.assertEqual(len(lex), 0)
        self.assertEqual(score_text("great app", lex), 0.0)

    def test_duplicate_last_wins(self):
        with self.assertLogs("components.lexicon_system", level="WARNING"):
            lex = load_lexicon(self._write("good\t0.7\ngood\t0.2\n"))
        self.assertEqual(lex.entries["good"], 0.2)
        self.assertEqual(lex.duplicate_count, 1)

    def test_negators_and_comments(self):
        lex = load_lexicon(self._write("# comment\n\n!negator\tNot\nGood\t0.7\n"))
        self.assertEqual(lex.negators, frozenset({"not"}))
        self.assertEqual(dict(lex.entries), {"good": 0.7})

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_lexicon(self.dir / "absent.tsv")

    def test_starter_lexicon_fixture(self):
        lex = load_lexicon(starter_lexicon_path)
        for word, polarity in {**POSITIVE_WORDS, **NEGATIVE_WORDS}.items():
            self.assertEqual(lex.entries[word], polarity)
        self.assertEqual(lex.negators, frozenset(NEGATORS))
        self.assertEqual(starter_lexicon_path.read_text(encoding="utf-8"), starter_lexicon_text())

    def test_entries_read_only(self):
        lex = load_lexicon(self._write("good\t0.7\n"))
        with self.assertRaises(TypeError):
            lex.entries["bad"] = -0.7


class TestScoreText(unittest.TestCase):
    def setUp(self):
        self.lex = Lexicon(entries={"good": 0.7, "bad": -0.7, "great": 1.0}, negators=frozenset({"not"}))

    def test_single_match(self):
        self.assertAlmostEqual(score_text("good app", self.lex), 0.7)

    def test_negation(self):
        self.assertAlmostEqual(score_text("not good", self.lex), -0.35)

    def test_negator_reaches_one_token_only(self):
        self.assertAlmostEqual(score_text("not really good", self.lex), 0.7)

    def test_no_match(self):
        self.assertEqual(score_text("the the the", self.lex), 0.0)
        self.assertEqual(score_text("", self.lex), 0.0)

    def test_mean_over_matches(self):
        self.assertAlmostEqual(score_text("good but bad and great", self.lex), (0.7 - 0.7 + 1.0) / 3)

    def test_range(self):
        rng = np.random.default_rng(7)
        words = ["good", "bad", "great", "not", "app", "the"]
        for _ in range(200):
            text = " ".join(rng.choice(words, size=int(rng.integers(0, 10))))
            polarity = score_text(text, self.lex)
            self.assertGreaterEqual(polarity, -1.0)
            self.assertLessEqual(polarity, 1.0)

    def test_scaling_polarities_scales_score(self):
        entries = {**POSITIVE_WORDS, **NEGATIVE_WORDS}
        words = sorted(entries) + ["app", "the", "not"]
        rng = np.random.default_rng(11)
        for scale in (0.5, -0.25, 0.0):
            scaled = Lexicon(entries={word: polarity * scale for word, polarity in entries.items()},
                             negators=frozenset({"not"}))
            unscaled = Lexicon(entries=entries, negators=frozenset({"not"}))
            for _ in range(50):
                text = " ".join(rng.choice(words, size=int(rng.integers(1, 12))))
                with self.subTest(scale=scale, text=text):
                    self.assertAlmostEqual(score_text(text, scaled), scale * score_text(text, unscaled), places=12)

    def test_token_order_irrelevant_without_negators(self):
        lex = Lexicon(entries={**POSITIVE_WORDS, **NEGATIVE_WORDS})
        words = sorted(lex.entries) + ["app", "the", "not"]
        rng = np.random.default_rng(12)
        for _ in range(100):
            tokens = list(rng.choice(words, size=int(rng.integers(1, 12))))
            shuffled = [tokens[index] for index in rng.permutation(len(tokens))]
            self.assertAlmostEqual(score_text(" ".join(tokens), lex), score_text(" ".join(shuffled), lex), places=12)


class TestAssignLabel(unittest.TestCase):
    def test_boundary_table(self):
        table = {
            -0.11: SentimentLabel.NEGATIVE,
            -0.1: SentimentLabel.NEUTRAL,
            0.0: SentimentLabel.NEUTRAL,
            0.1: SentimentLabel.NEUTRAL,
            0.11: SentimentLabel.POSITIVE,
        }
        for polarity, expected in table.items():
            with self.subTest(polarity=polarity):
                self.assertEqual(assign_label(polarity), expected)

    def test_examples(self):
        self.assertEqual(assign_label(0.35), SentimentLabel.POSITIVE)
        self.assertEqual(assign_label(-0.2), SentimentLabel.NEGATIVE)

    def test_monotone(self):
        grid = np.linspace(-1.0, 1.0, 401)
        labels = [int(assign_label(float(p))) for p in grid]
        self.assertEqual(labels, sorted(labels))

    def test_rule_validation(self):
        with self.assertRaises(ValueError):
            LabelRule(pos_threshold=-0.2, neg_threshold=0.2)

    def test_label_codes(self):
        self.assertEqual([int(label) for label in SentimentLabel], [0, 1, 2])
        self.assertEqual(SentimentLabel.from_name("positive"), SentimentLabel.POSITIVE)
        self.assertEqual(SentimentLabel.NEUTRAL.display_name, "Neutral")


if __name__ == '__main__':
    unittest.main()
