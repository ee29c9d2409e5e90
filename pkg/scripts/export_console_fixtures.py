#!/usr/bin/env python3
"""Record real server responses and an event trace into frontend/fixtures/.

The operator console's tests replay these files through its API and event
stream clients, so the frontend is exercised against genuine wire payloads
without needing a running server.
"""

import json
from pathlib import Path

from costar.bus import MessageBus
from costar.components import build_workcell
from costar.plan_dsl import parse, serialize
from costar.runner import plan_id_for, run_plan
from costar.world import load_scene

OUT = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


def write(name, payload):
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2, sort_keys=True))
    print(f"wrote fixtures/{name}")


def main():
    polishing = parse(Path("plans/polishing.bt").read_text(), name="polishing")
    write("polishing_plan.json", {
        "id": plan_id_for(polishing),
        "name": "polishing",
        "text": serialize(polishing),
        "tree": polishing.to_json()["tree"],
    })

    assembly = parse(Path("plans/assembly.bt").read_text(), name="assembly")
    write("assembly_plan.json", {
        "id": plan_id_for(assembly),
        "name": "assembly",
        "text": serialize(assembly),
        "tree": assembly.to_json()["tree"],
    })

    scene = load_scene("scenes/assembly.yaml")
    cell = build_workcell(scene)
    write("components.json",
          {"components": [d.to_json() for d in cell.registry.descriptors()]})
    write("symbols.json", {"symbols": [s.to_json() for s in cell.kb.symbols()]})

    bus = MessageBus()
    report = run_plan(assembly, scene, seed=42, bus=bus,
                      plan_id=plan_id_for(assembly))
    assert report.all_succeeded, "fixture run must succeed"
    write("assembly_trace.json",
          {"messages": [m.to_json() for m in bus.stream(0)]})
    write("assembly_report.json", report.to_json())


if __name__ == "__main__":
    main()
