from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exclusion.graph import (
    Graph,
    GraphSpecError,
    LogWeight,
    config_weight,
    cycle_graph,
    parse_graph_spec,
    path_graph,
    resolve_mode,
    star_graph,
    validate,
    vertex_weight,
)


def test_parse_json_default_rates():
    g = parse_graph_spec('{"num_vertices": 3, "edges": [[0, 1], [0, 2]]}')
    assert g.num_vertices == 3
    assert g.degrees == (2, 1, 1)
    assert g.rates == (1, 1, 1)
    assert g == star_graph(3)


def test_parse_json_rates():
    g = parse_graph_spec('{"num_vertices": 2, "edges": [[0, 1]], "rates": [2, 0.5]}')
    assert g.rates == (Fraction(2), Fraction(1, 2))
    assert g.is_rational


def test_parse_json_ratio_strings():
    g = parse_graph_spec('{"num_vertices": 2, "edges": [[0, 1]], "rates": ["1/3", "7/4"]}')
    assert g.rates == (Fraction(1, 3), Fraction(7, 4))


def test_parse_json_out_of_range():
    with pytest.raises(GraphSpecError, match="vertex id out of range"):
        parse_graph_spec('{"num_vertices": 3, "edges": [[0, 5]]}')


@pytest.mark.parametrize(
    "text, where",
    [
        ('{"num_vertices": 3, "edges": [[0, 1]', "line 1"),
        ('{"edges": []}', "num_vertices"),
        ('{"num_vertices": 2, "edges": [[0, 1, 1]]}', "edges[0]"),
        ('{"num_vertices": 2, "edges": [[0, 1]], "rates": [1]}', "rates"),
        ('{"num_vertices": 2, "edges": [[0, 1]], "rates": [1, "x"]}', "rates[1]"),
    ],
)
def test_parse_json_malformed(text, where):
    with pytest.raises(GraphSpecError, match=r"\(.*" + where.replace("[", r"\[").replace("]", r"\]")):
        parse_graph_spec(text)


def test_parse_edge_list():
    g = parse_graph_spec("# path\n4\n0 1\n1 2\n2 3\nrate 2 1/2\nrate 3 3\n")
    assert g == path_graph(4, [1, 1, Fraction(1, 2), 3])


def test_parse_edge_list_errors_carry_line():
    with pytest.raises(GraphSpecError, match="line 3"):
        parse_graph_spec("3\n0 1\n0 5\n")
    with pytest.raises(GraphSpecError, match="line 2"):
        parse_graph_spec("3\n0 1 2\n")


def test_validate_star():
    rep = validate(star_graph(3))
    assert rep.connected and rep.defect_list == ()


def test_validate_disconnected():
    rep = validate(Graph(4, ((0, 1), (2, 3))))
    assert not rep.connected
    assert rep.defect_list


def test_validate_nonpositive_rate():
    rep = validate(path_graph(3, [1, 0, 1]))
    assert "nonpositive rate at vertex 1" in rep.defect_list


def test_validate_loops_duplicates_isolated():
    rep = validate(Graph(4, ((0, 1), (1, 0), (2, 2), (1, 2))))
    assert "self-loop at vertex 2" in rep.defect_list
    assert "duplicate edge (0, 1)" in rep.defect_list
    assert "isolated vertex 3" in rep.defect_list
    assert not rep.connected


def test_vertex_weight_examples():
    assert vertex_weight(path_graph(4), 1) == 2
    assert vertex_weight(star_graph(25), 0) == 24
    g = path_graph(4, [1, 2, 2, 1])
    assert vertex_weight(g, 1) == 1


def test_vertex_weight_out_of_range():
    with pytest.raises(ValueError):
        vertex_weight(path_graph(4), 4)


def test_config_weight_examples():
    g = path_graph(4)
    assert config_weight(g, []) == 1
    assert config_weight(g, [1, 2]) == 4
    assert config_weight(g, [0, 1, 2, 3]) == 4


def test_log_mode_weights_agree():
    g = path_graph(5, [1, "1/3", 2, 1, "5/2"])
    for x in range(5):
        assert vertex_weight(g, x, "log").value == pytest.approx(float(vertex_weight(g, x)), rel=1e-14)
    assert config_weight(g, [1, 2, 4], "log").value == pytest.approx(float(config_weight(g, [1, 2, 4])), rel=1e-14)


def test_float_rates_select_log_mode():
    g = path_graph(3, [1.0, 0.3, 2.0])
    assert resolve_mode(g) == "log"
    assert isinstance(vertex_weight(g, 1), LogWeight)
    with pytest.raises(ValueError):
        resolve_mode(g, "rational")


def test_logweight_arithmetic():
    a, b = LogWeight(0.0), LogWeight(1.0)
    assert (a + b).value == pytest.approx(1 + 2.718281828459045)
    assert (a * b).value == pytest.approx(2.718281828459045)
    assert a + 0 == a
    assert a < b


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(3, 9),
    rates=st.lists(st.integers(1, 8), min_size=9, max_size=9),
    subset=st.sets(st.integers(0, 8)),
    x=st.integers(0, 8),
)
def test_config_weight_multiplicative(n, rates, subset, x):
    g = cycle_graph(n, [Fraction(r, 3) for r in rates[:n]])
    eta = {v for v in subset if v < n}
    x = x % n
    if x in eta:
        eta.discard(x)
    assert config_weight(g, eta | {x}) == config_weight(g, eta) * vertex_weight(g, x)


@settings(max_examples=40, deadline=None)
@given(perm=st.permutations(list(range(6))))
def test_vertex_weight_relabeling_invariant(perm):
    # relabel a fixed graph; each vertex keeps its weight under the new name
    edges = ((0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (2, 5))
    rates = [1, 2, Fraction(1, 2), 3, 1, 4]
    g = Graph(6, edges, rates)
    h = Graph(6, tuple((perm[u], perm[v]) for u, v in edges), [rates[perm.index(i)] for i in range(6)])
    for x in range(6):
        assert vertex_weight(h, perm[x]) == vertex_weight(g, x)
