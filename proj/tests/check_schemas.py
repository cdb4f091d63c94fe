#!/usr/bin/env python3
"""Run every CLI command on a tiny corpus and validate its JSON output."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def main() -> int:
    tool = sys.argv[1]
    schema_dir = pathlib.Path(sys.argv[2])
    schemas = {p.name: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(s)) for name, s in schemas.items())

    failures = []

    def check(schema: str, path: pathlib.Path) -> None:
        validator = jsonschema.Draft202012Validator(schemas[schema], registry=registry)
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        status = "ok" if not errors else "FAIL"
        print(f"{status} {schema} {path.name}")
        for e in errors[:5]:
            print(f"  {e.json_path}: {e.message}")
        if errors:
            failures.append(path)

    def run(*args: str) -> None:
        subprocess.run([tool, "--log-level", "off", *args], check=True)

    with tempfile.TemporaryDirectory() as tmp:
        t = pathlib.Path(tmp)
        corpus = t / "corpus"
        run("synth", "--out", str(corpus), "--per-bin", "1", "--test-per-bin", "1", "--novel-per-bin", "1")
        check("manifest.schema.json", corpus / "manifest.json")
        for ann in sorted(corpus.glob("*/*.json"))[:4]:
            check("annotations.schema.json", ann)

        run("train", "--corpus", str(corpus), "--out", str(t / "model.json"), "--report", str(t / "report.json"))
        check("model.schema.json", t / "model.json")
        check("train_report.schema.json", t / "report.json")

        run("match", "--a", str(corpus / "train" / "train_000.fgrd"), "--b", str(corpus / "train" / "train_001.fgrd"),
            "--out", str(t / "match.json"))
        check("matchset.schema.json", t / "match.json")

        run("predict-viewpoint", "--corpus", str(corpus), "--grid", str(corpus / "test" / "test_000.fgrd"),
            "--out", str(t / "pred.json"))
        check("predictions.schema.json", t / "pred.json")

        run("detect", "--corpus", str(corpus), "--model", str(t / "model.json"), "--out", str(t / "det.json"))
        check("detections.schema.json", t / "det.json")

        run("eval", "--corpus", str(corpus), "--det", f"L0={t / 'det.json'}", "--out", str(t / "eval.json"))
        check("eval_report.schema.json", t / "eval.json")

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
