import os
import sys
import tempfile
import unittest
from unittest import mock

import numpy as np

sys.path.insert(0, os.path.abspath("src"))

from utils.config import WORKERS_ENV, worker_count
from utils.files import file_checksum, read_csv, read_json, write_csv, write_json
from utils.naming import format_number, sanitize_token, unit_name
from utils.seeds import derive_seed, make_rng


class NamingTests(unittest.TestCase):
    def test_sanitize_token_removes_path_chars(self):
        self.assertEqual(sanitize_token("../run A"), "..-run-A")
        self.assertEqual(sanitize_token(""), "unknown")

    def test_format_number(self):
        self.assertEqual(format_number(2.0), "2")
        self.assertEqual(format_number(1.5), "1.5")

    def test_unit_name(self):
        self.assertEqual(unit_name(24, 2, 0), "w24_d2_t0")


class SeedTests(unittest.TestCase):
    def test_numpy_and_python_coordinates_agree(self):
        self.assertEqual(derive_seed(0, "student", np.int64(4), 2), derive_seed(0, "student", 4, 2))

    def test_coordinates_separate_streams(self):
        seeds = {derive_seed(0, "student", w) for w in range(50)}
        self.assertEqual(len(seeds), 50)
        self.assertNotEqual(derive_seed(0, "a"), derive_seed(1, "a"))

    def test_generator_is_reproducible(self):
        np.testing.assert_array_equal(make_rng(5).random(4), make_rng(5).random(4))


class FileTests(unittest.TestCase):
    def test_csv_keeps_exact_floats(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "nested", "t.csv")
            write_csv(path, ["a", "b", "flag"], [[0.1 + 0.2, np.float64(1e-300), True]])
            header, rows = read_csv(path)
            self.assertFalse(os.path.exists(path + ".tmp"))
        self.assertEqual(header, ["a", "b", "flag"])
        self.assertEqual(float(rows[0][0]), 0.1 + 0.2)
        self.assertEqual(rows[0][1:], ["1e-300", "1"])

    def test_json_turns_non_finite_into_null(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "r.json")
            write_json(path, {"x": float("nan"), "v": np.array([1.0, np.inf]), "n": np.int64(3)})
            self.assertEqual(read_json(path), {"x": None, "v": [1.0, None], "n": 3})

    def test_checksum_tracks_content(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "r.json")
            write_json(path, {"a": 1})
            first = file_checksum(path)
            write_json(path, {"a": 2})
            self.assertNotEqual(first, file_checksum(path))


class WorkerCountTests(unittest.TestCase):
    def test_environment_override(self):
        with mock.patch.dict(os.environ, {WORKERS_ENV: "3"}):
            self.assertEqual(worker_count(), 3)

    def test_bad_override_falls_back(self):
        with mock.patch.dict(os.environ, {WORKERS_ENV: "many"}):
            self.assertGreaterEqual(worker_count(), 1)


if __name__ == "__main__":
    unittest.main()
