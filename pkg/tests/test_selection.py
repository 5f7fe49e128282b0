import pytest

from sublaplace.select.selection import (
    SelectionError,
    SelectionMethod,
    SubsetSelection,
    export_selection,
    load_selection,
)


def test_export_then_load_keeps_order_and_provenance(tmp_path):
    selection = SubsetSelection((9, 2, 5), SelectionMethod.GREEDY_LAPLACE, 3, "extended")
    path = export_selection(selection, tmp_path / "sel" / "greedy.txt", seed=4)
    lines = path.read_text().splitlines()
    assert lines[0] == "# method=greedy_laplace k=3 seed=4 pool=extended"
    assert lines[1:] == ["9", "2", "5"]
    loaded = load_selection(path)
    assert loaded == selection
    assert loaded.sorted_indices == (2, 5, 9)


def test_plain_index_file_loads_as_explicit(tmp_path):
    path = tmp_path / "plain.txt"
    path.write_text("3\n\n1\n")
    loaded = load_selection(path)
    assert loaded.method == SelectionMethod.EXPLICIT
    assert loaded.indices == (3, 1) and loaded.pool_policy is None


@pytest.mark.parametrize("indices", [(), (1, 1), (-1, 2)])
def test_invalid_subsets(indices):
    with pytest.raises(SelectionError):
        SubsetSelection(indices)


def test_k_must_match():
    with pytest.raises(SelectionError):
        SubsetSelection((0, 1), k=3)
    with pytest.raises(SelectionError, match="out of range"):
        SubsetSelection((0, 4)).validate(4)


def test_labels():
    assert SelectionMethod.from_label("gradient-laplace") == SelectionMethod.GRADIENT_LAPLACE
    assert SelectionMethod.SUBNET_DIAGONAL.label == "subnet_diagonal"
