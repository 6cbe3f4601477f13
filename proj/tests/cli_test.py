"""End-to-end checks of the dynawarp command line tool.

Usage: cli_test.py <path to dynawarp binary>
"""

import json
import os
import struct
import subprocess
import sys
import tempfile
import unittest

BINARY = None

EXAMPLE = (
    "INFO: Connection to host established\n"
    "INFO: Start processing\n"
    "ERROR: Host connection terminated\n"
    "INFO: Restart triggered\n"
)

HEADER_SECTIONS = 40
LIST_BITS_SECTION = 6


def run(*args, check=True, stdin=None):
    proc = subprocess.run([BINARY, *args], input=stdin, capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


class Cli(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.dir, name)

    def write(self, name, text):
        with open(self.path(name), "w", encoding="utf-8") as f:
            f.write(text)
        return self.path(name)

    def ingest(self, text, out="segs", *extra):
        src = self.write(out + ".log", text)
        proc = run("--json", "ingest", "-i", src, "-o", self.path(out), *extra)
        return json.loads(proc.stdout)

    def test_empty_input_gives_empty_segment(self):
        summary = self.ingest("")
        self.assertEqual(len(summary), 1)
        self.assertEqual(summary[0]["lines"], 0)
        self.assertEqual(summary[0]["batches"], 0)
        self.assertEqual(run("query", "-s", self.path("segs"), "--term", "info").stdout, "")
        run("verify", "-s", self.path("segs"))

    def test_example_ingest_and_term_query(self):
        summary = self.ingest(EXAMPLE, "segs", "--batch-lines", "1")[0]
        self.assertEqual(summary["lines"], 4)
        self.assertEqual(summary["batches"], 4)
        out = run("query", "-s", self.path("segs"), "--term", "info").stdout.splitlines()
        self.assertEqual(out, [
            "INFO: Connection to host established",
            "INFO: Start processing",
            "INFO: Restart triggered",
        ])
        count = run("query", "-s", self.path("segs"), "--term", "host", "--count-only").stdout.strip()
        self.assertEqual(count, "2")

    def test_ingest_is_deterministic(self):
        corpus = run("generate", "-n", "3000", "--seed", "5").stdout
        self.ingest(corpus, "a")
        self.ingest(corpus, "b")
        for name in ("sketch.dwsk", "batches.dwb", "manifest.dwm"):
            with open(os.path.join(self.path("a"), "seg-000000", name), "rb") as fa, \
                    open(os.path.join(self.path("b"), "seg-000000", name), "rb") as fb:
                self.assertEqual(fa.read(), fb.read(), name)

    def test_sketch_and_scan_agree(self):
        corpus = run("generate", "-n", "5000", "--seed", "9").stdout
        self.ingest(corpus, "segs", "--batch-lines", "50")
        lines = corpus.splitlines()
        needles = [lines[17][5:16], lines[999][:9], "lamhmiagiialitjq", "blk_"]
        for needle in needles:
            fast = run("query", "-s", self.path("segs"), "--contains", needle).stdout
            slow = run("query", "-s", self.path("segs"), "--contains", needle, "--mode", "scan").stdout
            self.assertEqual(fast, slow, needle)
        for term in ("info", "error", "dfs.datanode"):
            fast = run("query", "-s", self.path("segs"), "--term", term).stdout
            slow = run("query", "-s", self.path("segs"), "--term", term, "--mode", "scan").stdout
            self.assertEqual(fast, slow, term)

    def test_explain_absent_needle(self):
        self.ingest(EXAMPLE, "segs", "--batch-lines", "1")
        proc = run("query", "-s", self.path("segs"), "--contains", "zzzz", "--explain")
        self.assertEqual(proc.stdout, "")
        fields = dict(line.split("\t", 1) for line in proc.stderr.splitlines() if "\t" in line)
        self.assertEqual(fields["mode"], "contains")
        self.assertEqual(fields["candidate_batches"], "0")
        self.assertEqual(fields["decompressed_batches"], "0")

    def test_verify_passes_then_detects_flipped_list_bit(self):
        src = self.write("ex.log", EXAMPLE)
        run("ingest", "-i", src, "-o", self.path("segs"), "--batch-lines", "1")
        ok = json.loads(run("--json", "verify", "-s", self.path("segs"), "-i", src).stdout)
        self.assertTrue(ok["ok"])

        sketch = os.path.join(self.path("segs"), "seg-000000", "sketch.dwsk")
        with open(sketch, "r+b") as f:
            data = bytearray(f.read())
            offset, length = struct.unpack_from("<QQ", data, HEADER_SECTIONS + 16 * LIST_BITS_SECTION)
            self.assertGreater(length, 0)
            data[offset] ^= 0x01
            f.seek(0)
            f.write(data)
        proc = run("--json", "verify", "-s", self.path("segs"), check=False)
        self.assertEqual(proc.returncode, 1)
        report = json.loads(proc.stdout)
        self.assertFalse(report["ok"])
        failed = [c for c in report["checks"] if not c["ok"]]
        self.assertTrue(any(c["check"].endswith("postings") and "token '" in c["detail"] for c in failed),
                        failed)

    def test_verify_detects_missing_input_lines(self):
        src = self.write("ex.log", EXAMPLE)
        run("ingest", "-i", src, "-o", self.path("segs"))
        other = self.write("other.log", EXAMPLE + "extra line\n")
        proc = run("verify", "-s", self.path("segs"), "-i", other, check=False)
        self.assertEqual(proc.returncode, 1)

    def test_stats_reports_sizes(self):
        self.ingest(EXAMPLE, "segs", "--batch-lines", "1")
        stats = json.loads(run("--json", "stats", "-s", self.path("segs")).stdout)[0]
        self.assertEqual(stats["batches"], 4)
        self.assertEqual(stats["lines"], 4)
        self.assertGreater(stats["sketch_bytes"], 160)
        self.assertEqual(sum(stats["rank_width_histogram"].values()), stats["tokens"])

    def test_capacity_rolls_over_to_new_segments(self):
        corpus = "".join(f"line number {i}\n" for i in range(30))
        summary = self.ingest(corpus, "segs", "--batch-lines", "4", "--capacity", "3")
        self.assertEqual([s["lines"] for s in summary], [12, 12, 6])
        count = run("query", "-s", self.path("segs"), "--contains", "number", "--count-only").stdout.strip()
        self.assertEqual(count, "30")

    def test_config_file_and_flag_precedence(self):
        src = self.write("c.log", "".join(f"entry {i}\n" for i in range(40)))
        cfg = self.write("c.ini", "[ingest]\nbatch-lines=4\n")
        out = json.loads(run("--json", "--config", cfg, "ingest", "-i", src, "-o", self.path("a")).stdout)
        self.assertEqual(out[0]["batches"], 10)
        out = json.loads(run("--json", "--config", cfg, "ingest", "-i", src, "-o", self.path("b"),
                             "--batch-lines", "20").stdout)
        self.assertEqual(out[0]["batches"], 2)
        bad = self.write("bad.ini", "batch_lines=4\n")
        proc = run("--config", bad, "ingest", "-i", src, "-o", self.path("c"), check=False)
        self.assertNotEqual(proc.returncode, 0)
        self.assertFalse(os.path.exists(self.path("c")))

    def test_bad_arguments_fail(self):
        self.assertNotEqual(run("query", "-s", self.dir, check=False).returncode, 0)
        self.assertNotEqual(run("ingest", "-i", "/nonexistent/x.log", "-o", self.path("o"),
                                check=False).returncode, 0)
        self.assertNotEqual(run("query", "-s", self.path("missing"), "--term", "x", check=False).returncode, 0)


if __name__ == "__main__":
    BINARY = sys.argv.pop(1)
    unittest.main()
