"""Shared hypothesis strategies."""
from hypothesis import strategies as st

from lampspeed.groups import INF, GroupSpec

sizes = st.sampled_from([1, 2, 3, 4, 5, 6, INF])
words = st.text(alphabet="Ttab", max_size=30)
short_words = st.text(alphabet="Ttab", max_size=8)


@st.composite
def specs(draw, level=1, finite_m=True, max_k=4):
    k = draw(st.integers(0, max_k))
    l = draw(sizes)
    if finite_m and draw(st.booleans()):
        m = draw(st.integers(2 * k + 1, 2 * k + 8))
    else:
        m = INF
    return GroupSpec(level, k, l, m)


@st.composite
def line_specs(draw, max_k=3, ls=(1, 2, 3, 4, 5, INF)):
    return GroupSpec(1, draw(st.integers(0, max_k)), draw(st.sampled_from(ls)), INF)
