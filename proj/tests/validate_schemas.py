"""Validates the artifacts written by test_cli against the shipped schemas."""
import json
import pathlib
import sys

import jsonschema


def main() -> int:
    schemas, artifacts = map(pathlib.Path, sys.argv[1:3])
    report_schema = json.loads((schemas / "metric_report.schema.json").read_text())
    record_schema = json.loads((schemas / "manifest_record.schema.json").read_text())
    reports = sorted(artifacts.rglob("report.json"))
    manifests = sorted(artifacts.rglob("manifest.jsonl"))
    if not reports or not manifests:
        print(f"no report.json or manifest.jsonl under {artifacts}")
        return 1
    for path in reports:
        jsonschema.validate(json.loads(path.read_text()), report_schema)
        print(f"ok {path}")
    for path in manifests:
        for line in path.read_text().splitlines():
            jsonschema.validate(json.loads(line), record_schema)
        print(f"ok {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
