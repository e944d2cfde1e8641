import pytest

from crossride.economics import PricingParams
from crossride.geo import RoadNetwork, shortest_distance
from crossride.requests import RiderRequest
from crossride.shareability import SharedPath, SharedTripCandidate


def line_network(n: int = 8, spacing: float = 1.0) -> RoadNetwork:
    nodes = {i: (i * spacing, 0.0) for i in range(n)}
    edges = [(i, i + 1, spacing) for i in range(n - 1)]
    return RoadNetwork(nodes, edges, {"all": list(range(n))})


def square_network() -> RoadNetwork:
    nodes = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
    edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]
    return RoadNetwork(nodes, edges, {"a": [0], "c": [2]})


def rider(net, rid, o, d, t=0.0, platform=0, pricing=None) -> RiderRequest:
    r = RiderRequest(rid, platform, float(t), o, d, shortest_distance(net, o, d))
    r.price(pricing or PricingParams())
    return r


def synthetic_candidate(direct=(2.0, 2.0), in_trip=(2.0, 2.0), profits=(5.0, 5.0), joint=12.4,
                        times=(0.0, 0.0), platforms=(0, 1), legs=(0.0, 2.0, 0.0), sequence=0):
    path = SharedPath(sequence, sum(legs), legs, in_trip)
    return SharedTripCandidate(1, 2, platforms, times, direct, path, (9.2, 9.2), joint, profits)


@pytest.fixture
def line():
    return line_network()


@pytest.fixture
def square():
    return square_network()


@pytest.fixture
def pricing():
    return PricingParams()


CRITERIA_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
