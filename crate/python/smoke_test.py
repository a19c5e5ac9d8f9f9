"""End-to-end smoke test of the tsr extension module.

Build first:  pip install --no-build-isolation -e crates/py
Run:          python3 python/smoke_test.py
"""

import json
import os
import tempfile

import tsr


def main():
    with tempfile.TemporaryDirectory() as tmp:
        corpus = os.path.join(tmp, "digits.txt")
        headers = os.path.join(tmp, "headers.txt")
        assert tsr.synth_corpus(corpus, seed=11, n_per_class=60) == 1200
        tsr.synth_corpus(headers, seed=12, kind="header", n_per_class=100)
        digit, train_acc, val_acc = tsr.train_model(corpus, epochs=20)
        header, _, _ = tsr.train_model(headers, kind="header", hidden=16, epochs=20)
        assert digit.layer_sizes[-1] == 10
        assert train_acc > 0.9, train_acc
        print(f"digit model: train {train_acc:.3f} validation {val_acc:.3f}")

        path = os.path.join(tmp, "digit.odr")
        digit.save(path)
        assert tsr.Model.load(path).layer_sizes == digit.layer_sizes

        frames, truth = tsr.synth_sequence("eu", seed=4, noise=6.0)
        assert len(frames) == 14 and len(truth) == 1
        value = truth[0][0]
        again, _ = tsr.synth_sequence("eu", seed=4, noise=6.0)
        assert frames[5].data() == again[5].data()

        first = frames[0]
        copy = tsr.Frame(first.width, first.height, first.data())
        assert copy.data() == first.data()
        assert tsr.detect(frames[-1], "circle"), "no circle candidates"

        pipe = tsr.Pipeline("eu", digit, header)
        events = []
        for f in frames:
            events += [r for r in pipe.process(f) if r["kind"] == "validated"]
        print(f"truth value {value}, validated {[e['value'] for e in events]}")
        assert [e["value"] for e in events] == [value]

        seq = os.path.join(tmp, "seq")
        assert tsr.write_sequence(seq, "eu", seed=4, noise=6.0) == 1
        out = os.path.join(tmp, "det.jsonl")
        summary = tsr.Pipeline("eu", digit, header).run_directory(seq, out=out)
        assert summary["frames"] == 14
        with open(out) as fh:
            rows = [json.loads(line) for line in fh]
        assert sum(r["kind"] == "validated" for r in rows) == summary["events"]
        report = tsr.evaluate(out, os.path.join(seq, "truth.jsonl"))
        assert report["correct"] + report["missed"] + report["misclassified"] == report["total"] == 1
        print(f"eval: {report}")

        try:
            tsr.Pipeline("us", digit)
        except tsr.TsrError as e:
            print(f"expected error: {e}")
        else:
            raise AssertionError("US mode without a header model must fail")
        try:
            tsr.Frame(4, 4, b"\x00")
        except tsr.TsrError:
            pass
        else:
            raise AssertionError("short pixel buffer must fail")
    print("smoke test passed")


if __name__ == "__main__":
    main()
