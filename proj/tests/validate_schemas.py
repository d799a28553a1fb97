"""Run each CLI subcommand once and validate its JSON against the shipped schemas."""

import json
import pathlib
import subprocess
import sys
import tempfile

import numpy as np
from jsonschema import Draft202012Validator
from referencing import Registry, Resource


def load_registry(schema_dir):
    schemas = {}
    for path in sorted(schema_dir.glob("*.schema.json")):
        doc = json.loads(path.read_text())
        Draft202012Validator.check_schema(doc)
        schemas[path.name] = doc
    registry = Registry().with_resources(
        (doc["$id"], Resource.from_contents(doc)) for doc in schemas.values()
    )
    return schemas, registry


def run(binary, *args):
    proc = subprocess.run([binary, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise SystemExit(f"{' '.join(args)} exited {proc.returncode}: {proc.stderr}")
    return json.loads(proc.stdout)


def main():
    binary, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])
    schemas, registry = load_registry(schema_dir)

    def check(name, doc):
        validator = Draft202012Validator(schemas[name], registry=registry)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        for err in errors:
            print(f"{name}: {list(err.path)}: {err.message}")
        return not errors

    rng = np.random.default_rng(3)
    x = rng.normal(size=(120, 4))
    y = x @ np.array([1.0, -1.0, 0.5, 0.0]) + rng.normal(size=120)
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        data = pathlib.Path(tmp) / "data.csv"
        np.savetxt(data, np.column_stack([x, y]), delimiter=",", header="a,b,c,d,y", comments="")
        beta = pathlib.Path(tmp) / "beta.csv"
        np.savetxt(beta, np.array([1.0, -1.0, 0.5, 0.0]))
        design = pathlib.Path(tmp) / "design.csv"
        np.savetxt(design, x, delimiter=",")
        config = pathlib.Path(tmp) / "sim.json"
        config.write_text(json.dumps({"n": 80, "p": 4, "q_list": [20, 40], "replications": 2,
                                      "lambda_grid": [1, 10, 100], "test_n": 40}))

        ok &= check("fit.schema.json", run(binary, "fit", "--input", str(data), "--q", "40", "--seed", "1",
                                            "--methods", "ols,ridge,fc,pc,linear,convex", "--emit-coefficients"))
        ok &= check("fit.schema.json", run(binary, "fit", "--input", str(data), "--q", "40", "--criterion", "cp",
                                            "--sigma2", "1"))
        ok &= check("tune.schema.json", run(binary, "tune", "--input", str(data), "--q", "40"))
        ok &= check("sketch.schema.json", run(binary, "sketch", "--n", "30", "--q", "10", "--emit-entries"))
        ok &= check("theory.schema.json", run(binary, "theory", "--preset", "gaussian-sim", "--theta", "0,0.3,1"))
        ok &= check("theory.schema.json", run(binary, "theory", "--n", "120", "--q", "40", "--sigma2", "1",
                                               "--beta", str(beta), "--design", str(design), "--lambda", "1,10"))
        ok &= check("simulate.schema.json", run(binary, "simulate", "--config", str(config)))
    print("schema validation", "passed" if ok else "FAILED")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
