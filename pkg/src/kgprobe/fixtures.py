"""Deterministic synthetic battery-science problem corpus.

The bundled 100-problem corpus is generated here with a fixed seed. Field
multiplicities are planned so the default schema expands problems into
graphs of 15-18 triples with the count histogram {15: 5, 16: 82, 17: 11,
18: 2}, which yields a mean of 16.1 triples/problem, a top-8 fraction of
0.4973, and a top-4 fraction of 0.2487.

Regenerate the bundled file with::

    python -m kgprobe.fixtures
"""

from __future__ import annotations

import random
from pathlib import Path

from kgprobe.config import Config
from kgprobe.kg_core import ProblemRecord, build_local_graph, save_problems

SYSTEMS = [
    "lithium-ion battery",
    "sodium-ion battery",
    "lithium-sulfur battery",
    "solid-state battery",
    "zinc-air battery",
    "lithium metal battery",
    "potassium-ion battery",
    "magnesium-ion battery",
    "metal-iodine battery",
    "aqueous zinc battery",
    "lithium iron phosphate battery",
    "nickel-rich layered oxide battery",
]

COMPONENTS = [
    "silicon anode",
    "graphite anode",
    "hard carbon anode",
    "lithium metal anode",
    "nickel-rich cathode",
    "sulfur cathode",
    "olivine phosphate cathode",
    "spinel oxide cathode",
    "garnet solid electrolyte",
    "polymer gel electrolyte",
    "ceramic coated separator",
    "porous carbon host",
    "copper current collector",
    "aluminum current collector",
]

FAILURES = [
    "capacity fade",
    "dendrite growth",
    "electrolyte decomposition",
    "polysulfide shuttle",
    "transition metal dissolution",
    "particle cracking",
    "gas evolution",
    "voltage fade",
    "thermal runaway",
    "interfacial delamination",
    "self-discharge",
    "impedance growth",
    "lithium plating",
    "cathode surface reconstruction",
]

INTERVENTIONS = [
    "protective surface coating",
    "electrolyte additive engineering",
    "gradient cation doping",
    "artificial interphase layer",
    "nanostructured scaffold design",
    "binder network modification",
    "separator surface treatment",
    "single-crystal morphology control",
    "concentration gradient architecture",
    "pre-lithiation treatment",
    "localized high-concentration electrolyte",
    "fluorinated solvent blend",
    "atomic layer deposition overlayer",
    "elastic polymer encapsulation",
]

MECHANISMS = [
    "stabilized solid electrolyte interphase",
    "suppressed interfacial side reactions",
    "enhanced ionic transport pathways",
    "homogenized lithium flux distribution",
    "buffered volume expansion",
    "anchored polysulfide intermediates",
    "reduced charge transfer resistance",
    "mitigated lattice strain accumulation",
    "scavenged hydrofluoric acid species",
    "reinforced cathode electrolyte interphase",
    "confined active material domains",
    "accelerated desolvation kinetics",
    "pinned oxygen framework",
    "percolating electronic network",
]

PROPERTIES = [
    "cycle life",
    "rate capability",
    "coulombic efficiency",
    "energy density",
    "capacity retention",
    "thermal stability",
    "interfacial stability",
    "power density",
    "low-temperature performance",
    "areal capacity",
    "voltage stability",
    "mechanical integrity",
]

OUTCOMES = [
    "extended cycling stability",
    "improved capacity retention",
    "suppressed dendrite formation",
    "enhanced rate performance",
    "reduced impedance growth",
    "higher coulombic efficiency",
    "stable long-term operation",
    "improved safety margin",
    "increased usable capacity",
    "lowered polarization",
    "prolonged calendar life",
    "recovered reversible capacity",
]

STATEMENT_TEMPLATES = [
    "In {sys}, the {comp} exhibits {fail} under extended cycling, which "
    "steadily erodes {prop}. An approach is needed that keeps the cell "
    "stable without sacrificing performance.",
    "Practical {sys} designs are limited by {fail} at the {comp}, and the "
    "resulting loss of {prop} remains unresolved. The challenge is to "
    "identify what controls this behaviour.",
    "Severe {fail} has been observed in the {comp} of {sys} cells, "
    "compromising {prop} over repeated charge-discharge operation. A "
    "strategy that addresses the root cause is sought.",
    "The {comp} in {sys} suffers from {fail}, and {prop} degrades as a "
    "consequence. It is unclear which design change would best restore "
    "stable operation.",
]

# Triple-count histogram for the shipped corpus (problem count per size).
SIZE_HISTOGRAM = {15: 5, 16: 82, 17: 11, 18: 2}

DEFAULT_SEED = 20240811


def _patterns_by_total() -> dict[int, list[dict[str, int]]]:
    """Field multiplicity vectors grouped by resulting triple count.

    Under the default schema, total = 1 + c + t + o + 2*(f + i + m) where
    every multiplicity is 1 or 2 and material_system is always single.
    """
    groups: dict[int, list[dict[str, int]]] = {}
    for c in (1, 2):
        for f in (1, 2):
            for i in (1, 2):
                for m in (1, 2):
                    for t in (1, 2):
                        for o in (1, 2):
                            total = 1 + c + t + o + 2 * (f + i + m)
                            groups.setdefault(total, []).append(
                                {
                                    "component": c,
                                    "failure_mode": f,
                                    "intervention": i,
                                    "mechanism": m,
                                    "target_property": t,
                                    "claimed_outcome": o,
                                }
                            )
    return groups


def generate_problems(n: int = 100, seed: int = DEFAULT_SEED) -> list[ProblemRecord]:
    """Generate ``n`` problems whose default-schema graphs match the histogram."""
    rng = random.Random(seed)
    sizes: list[int] = []
    for size, count in sorted(SIZE_HISTOGRAM.items()):
        sizes.extend([size] * count)
    if n != len(sizes):
        # Fall back to mostly-16 for non-default corpus sizes.
        sizes = [16] * n
    rng.shuffle(sizes)

    groups = _patterns_by_total()
    problems: list[ProblemRecord] = []
    for idx, target in enumerate(sizes, start=1):
        pattern = rng.choice(groups[target])
        system = rng.choice(SYSTEMS)
        components = rng.sample(COMPONENTS, pattern["component"])
        failures = rng.sample(FAILURES, pattern["failure_mode"])
        interventions = rng.sample(INTERVENTIONS, pattern["intervention"])
        mechanisms = rng.sample(MECHANISMS, pattern["mechanism"])
        properties = rng.sample(PROPERTIES, pattern["target_property"])
        outcomes = rng.sample(OUTCOMES, pattern["claimed_outcome"])
        statement = rng.choice(STATEMENT_TEMPLATES).format(
            sys=system, comp=components[0], fail=failures[0], prop=properties[0]
        )
        problems.append(
            ProblemRecord(
                id=f"p{idx:03d}",
                problem_statement=statement,
                material_system=system,
                component="; ".join(components),
                failure_mode="; ".join(failures),
                intervention="; ".join(interventions),
                mechanism="; ".join(mechanisms),
                target_property="; ".join(properties),
                claimed_outcome="; ".join(outcomes),
            )
        )
    return problems


def write_default_corpus(path: str | Path, n: int = 100, seed: int = DEFAULT_SEED) -> None:
    """Generate the corpus, verify triple counts against the plan, and save."""
    problems = generate_problems(n=n, seed=seed)
    schema = Config.load().schema()
    histogram: dict[int, int] = {}
    for p in problems:
        size = len(build_local_graph(p, schema).triples)
        histogram[size] = histogram.get(size, 0) + 1
    if n == 100 and histogram != SIZE_HISTOGRAM:
        raise AssertionError(f"corpus histogram drifted: {histogram}")
    save_problems(problems, path)


if __name__ == "__main__":
    target = Path(__file__).parent / "data" / "problems.jsonl"
    write_default_corpus(target)
    print(f"wrote {target}")
