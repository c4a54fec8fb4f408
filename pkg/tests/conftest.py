import json

import pytest

from geosemnav import (
    KnowledgeParams,
    bundled_class_table,
    bundled_corpus,
    ingest_corpus,
    load_floorplan,
)
from geosemnav.harness import resolve_asset
from geosemnav.world import load_floorplan_file


@pytest.fixture(scope="session")
def class_table():
    return bundled_class_table()


@pytest.fixture()
def corpus_store(class_table):
    # fresh per test: online updates mutate the store
    return ingest_corpus(bundled_corpus(), KnowledgeParams(), class_table)


@pytest.fixture(scope="session")
def office_plan():
    return load_floorplan_file(resolve_asset("office_fig3", "floorplan"))


@pytest.fixture(scope="session")
def webots_plan():
    return load_floorplan_file(resolve_asset("webots_replica", "floorplan"))


def plan_from(doc: dict):
    return load_floorplan(json.dumps(doc))


def open_room(name="room", width=6, height=6, zone="office", **extra):
    doc = {
        "name": name,
        "width": width,
        "height": height,
        "cells": ["." * width for _ in range(height)],
        "zones": [{"label": zone, "rect": [0, 0, width - 1, height - 1]}],
    }
    doc.update(extra)
    return plan_from(doc)


@pytest.fixture()
def make_plan():
    return plan_from


@pytest.fixture()
def make_room():
    return open_room
