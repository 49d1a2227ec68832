import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def film_cohort():
    from cohortqa.data_model import load_cohorts

    return load_cohorts(FIXTURES / "cohorts.jsonl")[0]


@pytest.fixture(scope="session")
def sim_cohorts():
    from cohortqa.data_model import load_cohorts

    return load_cohorts(FIXTURES / "sim_cohorts.jsonl")


@pytest.fixture(scope="session")
def fact_retriever():
    from cohortqa.retriever import FactTable, MockRetriever

    return MockRetriever(FactTable.from_jsonl(FIXTURES / "facts.jsonl"))


@pytest.fixture(scope="session")
def exemplar_corpus():
    records = []
    with open(FIXTURES / "exemplars.jsonl", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(json.loads(line))
    return records


@pytest.fixture(scope="session")
def program_pool(sim_cohorts):
    from cohortqa.dsl import parse_program

    header = sim_cohorts[0].template.function_header
    pool = []
    with open(FIXTURES / "pool.jsonl", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                obj = json.loads(line)
                pool.append((obj["name"], parse_program(obj["source"], header)))
    return pool
