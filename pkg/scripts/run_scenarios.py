#!/usr/bin/env python3
"""Run the bundled demonstration scenarios and print one line per outcome:
wire bending (blind waypoints), polishing with the tool docked and away
(reset preemption), pick-a-node, and the full structure assembly.
"""

from pathlib import Path

from costar.plan_dsl import parse
from costar.runner import run_plan
from costar.world import load_scene

SCENARIOS = [
    ("wire bending", "plans/wire_bend.bt", "scenes/wire_bend.yaml", 0),
    ("polishing (tool docked)", "plans/polishing.bt", "scenes/polishing.yaml", 0),
    ("polishing (tool away)", "plans/polishing.bt", "scenes/polishing_away.yaml", 0),
    ("pick node", "plans/pick_node.bt", "scenes/assembly.yaml", 42),
    ("structure assembly", "plans/assembly.bt", "scenes/assembly.yaml", 42),
]


def main():
    for label, plan_path, scene_path, seed in SCENARIOS:
        doc = parse(Path(plan_path).read_text(), name=Path(plan_path).stem)
        scene = load_scene(scene_path)
        report = run_plan(doc, scene, seed=seed)
        trial = report.per_trial[0]
        line = f"{label:<26} {trial.status.upper():<8} ticks={trial.tick_count}"
        if trial.failure_node:
            line += f" failed at {trial.failure_node}: {trial.diagnostic}"
        print(line)


if __name__ == "__main__":
    main()
