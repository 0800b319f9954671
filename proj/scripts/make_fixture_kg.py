#!/usr/bin/env python3
"""Regenerates data/fmea_kg.jsonl, the bundled FMEA knowledge graph fixture.

The graph is domain-level: 63 failure modes mapped onto 9 asset categories,
210 entities and 1004 relations in total. Output is deterministic; rerunning
this script reproduces the file byte for byte.
"""
import json
import random
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "fmea_kg.jsonl"

TARGET_ENTITIES = 210
TARGET_RELATIONS = 1004

CATEGORIES = [
    ("cat_drilling_equipment", "Drilling equipment"),
    ("cat_marine_equipment", "Marine equipment"),
    ("cat_electrical_systems", "Electrical systems"),
    ("cat_mechanical_systems", "Mechanical systems"),
    ("cat_rotating_equipment", "Rotating machinery"),
    ("cat_safety_and_control", "Safety and control"),
    ("cat_subsea_equipment", "Subsea equipment"),
    ("cat_well_completion", "Well completion"),
    ("cat_well_intervention", "Well intervention"),
]

SENSORS = [
    ("volt", "Sensors used to monitor the voltage supplied to or produced by machinery, where deviations can indicate electrical faults or load changes."),
    ("rotate", "Specialized sensors used to analyze rotational speed; sustained drops or oscillations can indicate drivetrain or bearing problems."),
    ("pressure", "Monitors the pressure in process lines and vessels; sustained high or erratic readings can indicate restrictions or valve malfunctions."),
    ("vibration", "Vibration sensors monitor machinery for abnormal vibrations, which can indicate issues like misalignment, imbalance, or wear."),
    ("temperature", "Temperature probes tracking thermal state of equipment; rising trends can indicate friction, fouling, or cooling loss."),
    ("flow", "Flow meters measuring volumetric or mass flow of the process medium through a line."),
    ("current", "Current transducers monitoring electrical draw of motors and drives."),
    ("level", "Level transmitters reporting fluid level in tanks and separators."),
    ("humidity", "Humidity sensors for enclosure and ambient condition monitoring."),
    ("acoustic", "Acoustic emission pickups used to detect leaks, cavitation, and early-stage cracking."),
    ("torque", "Torque meters on shafts and drive couplings."),
    ("position", "Position encoders reporting actuator and valve positions."),
]

# ISO-14224-style failure mode catalogue (code, short name, severity).
GENERIC_MODES = [
    ("air", "Abnormal instrument reading", "medium"),
    ("brd", "Breakdown", "very_high"),
    ("elp", "External leakage process medium", "high"),
    ("elu", "External leakage utility medium", "medium"),
    ("ero", "Erratic output", "medium"),
    ("fts", "Fail to start on demand", "high"),
    ("stp", "Fail to stop on demand", "high"),
    ("ust", "Spurious stop", "medium"),
    ("hio", "High output", "medium"),
    ("inl", "Internal leakage", "high"),
    ("loo", "Low output", "medium"),
    ("noi", "Noise", "low"),
    ("ohe", "Overheating", "high"),
    ("pde", "Parameter deviation", "medium"),
    ("plu", "Plugged or choked", "high"),
    ("ser", "Minor in-service problems", "low"),
    ("std", "Structural deficiency", "high"),
    ("stu", "Stuck", "high"),
    ("vib", "Excessive vibration", "high"),
    ("aol", "Abnormal oil level", "medium"),
    ("bre", "Rupture", "very_high"),
    ("cor", "Corrosion attack", "high"),
    ("cav", "Cavitation damage", "high"),
    ("cnt", "Contamination ingress", "medium"),
    ("crk", "Cracking", "very_high"),
    ("def", "Mechanical deformation", "high"),
    ("dop", "Delayed operation", "medium"),
    ("ele", "Electrical insulation failure", "high"),
    ("eru", "Erosion wear", "medium"),
    ("fof", "Faulty output frequency", "medium"),
    ("fov", "Faulty output voltage", "medium"),
    ("ftc", "Fail to close on demand", "high"),
    ("fto", "Fail to open on demand", "high"),
    ("ftf", "Fail to function on demand", "very_high"),
    ("ftr", "Fail to regulate", "medium"),
    ("fwr", "Fluid washout or seal wear", "medium"),
    ("hea", "Heating failure", "high"),
    ("ihr", "Insufficient heat removal", "high"),
    ("lbp", "Loss of buoyancy or position", "very_high"),
    ("lcp", "Loss of containment pressure", "very_high"),
    ("loa", "Load drop or loss of load control", "very_high"),
    ("lof", "Low oil supply flow", "high"),
    ("lub", "Lubrication failure", "high"),
    ("mof", "Mooring failure", "very_high"),
    ("ooa", "Operation outside analysis envelope", "medium"),
    ("pdr", "Pressure drop across filter", "low"),
    ("pwl", "Power loss", "high"),
    ("sbu", "Sensor bias or drift", "medium"),
    ("sck", "Short circuit", "high"),
    ("sef", "Sealing failure", "high"),
    ("sld", "Sludge or deposit build-up", "medium"),
    ("spo", "Spurious operation", "medium"),
    ("swf", "Software or logic fault", "medium"),
    ("tfw", "Thread or fastener working loose", "medium"),
    ("ubal", "Unbalance", "high"),
    ("vlc", "Valve leakage in closed position", "high"),
    ("wde", "Wear-out degradation", "medium"),
    ("wir", "Wiring or connector fault", "medium"),
    ("xlk", "Cross leakage between circuits", "high"),
]

# PdM component failure modes referenced by the bundled telemetry fixture.
PDM_MODES = [
    {
        "id": "comp1",
        "name": "Power supply / voltage fault",
        "severity": "high",
        "description": "Degradation or intermittent faults in the electrical supply path causing abnormal voltage delivered to the machine.",
        "sensors": ["volt"],
        "indicators": {
            "volt_mean": "shifted away from healthy baseline",
            "volt_std": "elevated spread",
        },
        "actions": [
            "inspect supply wiring, terminals, and contactors",
            "measure supply voltage under load",
            "replace degraded power components",
        ],
    },
    {
        "id": "comp2",
        "name": "Rotation speed degradation",
        "severity": "high",
        "description": "Drivetrain wear or slippage causing sustained drops or oscillations in rotational speed.",
        "sensors": ["rotate"],
        "indicators": {
            "rotate_mean": "below healthy baseline",
            "rotate_trend": "often negative",
        },
        "actions": [
            "inspect belts, gears, and couplings for wear",
            "verify drive controller setpoints",
            "lubricate or replace drivetrain components",
        ],
    },
    {
        "id": "comp3",
        "name": "Rotor / bearing vibration fault",
        "severity": "very_high",
        "description": "Mechanical wear, misalignment, or unbalance in the rotor, bearings, or coupling producing abnormal vibration signatures.",
        "sensors": ["vibration"],
        "indicators": {
            "vibration_mean": "significantly above healthy baseline",
            "vibration_max": "high peaks",
        },
        "actions": [
            "perform vibration analysis and balancing",
            "inspect bearings, lubrication, and alignment",
            "check coupling condition and soft-foot or foundation issues",
        ],
    },
    {
        "id": "comp4",
        "name": "Rotor / bearing vibration fault",
        "severity": "very_high",
        "description": "Mechanical wear, misalignment, or unbalance in the rotor, bearings, or coupling, with secondary speed disturbance.",
        "sensors": ["vibration", "rotate"],
        "indicators": {
            "vibration_mean": "significantly above healthy baseline",
            "vibration_max": "high peaks",
        },
        "actions": [
            "perform vibration analysis and balancing",
            "inspect bearings, lubrication, and alignment",
            "check coupling condition and soft-foot or foundation issues",
        ],
    },
]

ACTION_VERBS = [
    "inspect", "replace", "recalibrate", "clean", "tighten", "lubricate",
    "flush", "pressure-test", "re-terminate", "balance", "align", "overhaul",
]
ACTION_OBJECTS = [
    "seals and gaskets", "impeller", "drive coupling", "instrument loop",
    "control valve", "hydraulic lines", "filter elements", "bearing housing",
    "junction box wiring", "relief valve", "cooling circuit", "guide rails",
    "anchor bolts", "sensor mounting", "gearbox", "stator windings",
]

COMPONENT_NAMES = [
    "rotor", "bearing assembly", "shaft coupling", "impeller", "stator",
    "gearbox", "drive belt", "control valve", "check valve", "relief valve",
    "pump casing", "seal cartridge", "filter housing", "heat exchanger",
    "lubrication pump", "oil reservoir", "cooling fan", "junction box",
    "power contactor", "variable frequency drive", "PLC module",
    "pressure transmitter housing", "accumulator", "hydraulic cylinder",
    "riser joint", "blowout preventer ram", "choke manifold", "wireline winch",
    "mud pump liner", "top drive motor", "swivel", "crown block",
    "anchor winch", "thruster", "ballast pump", "hull penetration",
    "subsea connector", "christmas tree valve", "umbilical", "flying lead",
    "packer element", "tubing hanger", "safety valve spring",
    "gas lift mandrel", "frac sleeve", "coiled tubing injector head",
    "stuffing box", "snubbing jack", "battery bank", "UPS rectifier",
    "switchgear breaker", "busbar", "emergency stop loop", "fire damper",
    "gas detector head", "deluge nozzle",
]


def main() -> int:
    rng = random.Random(20240614)
    entities = []
    relations = []

    def ent(eid, kind, name, attributes=None):
        entities.append({
            "record": "entity", "id": eid, "kind": kind, "name": name,
            "attributes": attributes or {},
        })

    def rel(subject, predicate, obj):
        relations.append({
            "record": "relation", "subject": subject,
            "predicate": predicate, "object": obj,
        })

    for cid, cname in CATEGORIES:
        ent(cid, "asset_category", cname, {"description": f"{cname} asset category."})

    # Asset classes: the four PdM machine models plus two classes per other category.
    pdm_models = []
    for i in range(1, 5):
        eid = f"asset_model{i}"
        pdm_models.append(eid)
        ent(eid, "asset_class", f"model{i}", {
            "equipment_category": "rotating_equipment",
            "equipment_class_type": "electric_motor_driven_rotating_machine",
            "unit_subunit": "rotor,bearings,coupling",
        })
        rel(eid, "component_of", "cat_rotating_equipment")
    other_classes = []
    class_specs = [
        ("cat_drilling_equipment", "drilling_equipment", ["top drive", "mud pump"]),
        ("cat_marine_equipment", "marine_equipment", ["anchor winch", "thruster unit"]),
        ("cat_electrical_systems", "electrical_systems", ["switchgear", "UPS system"]),
        ("cat_mechanical_systems", "mechanical_systems", ["crane", "conveyor"]),
        ("cat_safety_and_control", "safety_and_control", ["fire and gas system", "ESD system"]),
        ("cat_subsea_equipment", "subsea_equipment", ["subsea pipeline", "subsea pump"]),
        ("cat_well_completion", "well_completion", ["tubing hanger system", "downhole safety valve"]),
        ("cat_well_intervention", "well_intervention", ["wireline unit", "coiled tubing unit"]),
    ]
    for cat, slug, names in class_specs:
        for name in names:
            eid = "asset_" + name.lower().replace(" ", "_")
            other_classes.append(eid)
            ent(eid, "asset_class", name, {
                "equipment_category": slug,
                "equipment_class_type": name.lower().replace(" ", "_"),
                "unit_subunit": "frame,drive,instrumentation",
            })
            rel(eid, "component_of", cat)
    all_classes = pdm_models + other_classes

    for sid, desc in SENSORS:
        ent(f"sensor_{sid}", "sensor", sid, {"description": desc})
        rel(f"sensor_{sid}", "description", desc)

    components = []
    for name in COMPONENT_NAMES:
        eid = "cmp_" + name.lower().replace(" ", "_")
        components.append(eid)
        ent(eid, "component", name, {})
        rel(eid, "component_of", rng.choice(all_classes))

    actions = []
    for verb in ACTION_VERBS:
        for obj in ACTION_OBJECTS[: len(ACTION_OBJECTS)]:
            if len(actions) >= 41:
                break
            eid = "act_" + f"{verb}_{obj}".lower().replace(" ", "_").replace("-", "_")
            if any(e["id"] == eid for e in entities):
                continue
            actions.append(eid)
            ent(eid, "action", f"{verb} {obj}", {})
        if len(actions) >= 41:
            break

    sensor_ids = [f"sensor_{sid}" for sid, _ in SENSORS]

    def failure_mode(fid, name, severity, description, sensor_names, indicators, action_names, category_slug):
        attrs = {
            "severity": severity,
            "description": description,
            "equipment_category": category_slug,
        }
        for feat, expectation in indicators.items():
            attrs[f"indicator:{feat}"] = expectation
        ent(fid, "failure_mode", name, attrs)
        rel(fid, "description", description)
        for s in sensor_names:
            rel(fid, "indicated_by", f"sensor_{s}")
        for a in action_names:
            rel(fid, "mitigated_by", a)

    # PdM modes are fully pinned; their actions become first-class action entities.
    for spec in PDM_MODES:
        act_ids = []
        for label in spec["actions"]:
            eid = "act_" + label.lower().replace(" ", "_").replace(",", "").replace("-", "_")
            if not any(e["id"] == eid for e in entities):
                ent(eid, "action", label, {})
                actions.append(eid)
            act_ids.append(eid)
        failure_mode(spec["id"], spec["name"], spec["severity"], spec["description"],
                     spec["sensors"], spec["indicators"], act_ids, "rotating_equipment")
        for m in pdm_models:
            rel(spec["id"], "affects", m)
        rel(spec["id"], "involves", "cmp_rotor")
        rel(spec["id"], "involves", "cmp_bearing_assembly")

    rel("comp1", "alias", "Voltage supply fault")
    rel("comp2", "alias", "Speed loss fault")
    rel("comp3", "alias", "Bearing wear fault")
    rel("comp4", "alias", "Compound vibration fault")

    cat_slugs = [cid.removeprefix("cat_") for cid, _ in CATEGORIES]
    for code, name, severity in GENERIC_MODES:
        n_sens = rng.choice([1, 1, 2])
        sens = rng.sample([s for s, _ in SENSORS], n_sens)
        n_act = rng.choice([2, 3])
        acts = rng.sample(actions, n_act)
        indicators = {f"{sens[0]}_mean": "deviates from healthy baseline"}
        desc = f"{name}: condition in which the equipment exhibits {name.lower()} behaviour requiring intervention."
        failure_mode(code, name, severity, desc, sens, indicators, acts, rng.choice(cat_slugs))
        for cls in rng.sample(all_classes, 3):
            rel(code, "affects", cls)
        for cmp_id in rng.sample(components, 2):
            rel(code, "involves", cmp_id)

    fm_ids = [e["id"] for e in entities if e["kind"] == "failure_mode"]
    assert len(fm_ids) == 63, f"expected 63 failure modes, got {len(fm_ids)}"
    assert len(entities) == TARGET_ENTITIES, f"expected {TARGET_ENTITIES} entities, got {len(entities)}"

    # Pad with sample-observation links up to the target relation count.
    guard = 0
    while len(relations) < TARGET_RELATIONS:
        fm = rng.choice(fm_ids)
        target = rng.choice(components + sensor_ids)
        predicate = "sample" if guard % 2 == 0 else "involves"
        if predicate == "involves" and target.startswith("sensor_"):
            target = rng.choice(components)
        rel(fm, predicate, target)
        guard += 1
    assert len(relations) == TARGET_RELATIONS

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", encoding="utf-8") as fh:
        for record in entities + relations:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {OUT}: {len(entities)} entities, {len(relations)} relations")
    return 0


if __name__ == "__main__":
    sys.exit(main())
