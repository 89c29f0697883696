import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uniqcert.errors import (
    FormatError,
    IncompleteGridError,
    NonUniformGridError,
    ValidationError,
)
from uniqcert.grid import Axis, MultiIndex, SampledField, export_csv, ingest_csv


def small_field():
    axes = (Axis("t", 0.0, 0.5, 3), Axis("x", -1.0, 0.25, 4))
    vals = np.arange(12, dtype=float).reshape(3, 4)
    return SampledField(axes=axes, values=vals, label="demo")


class TestAxis:
    def test_coords(self):
        ax = Axis("x", 1.0, 0.5, 4)
        assert np.allclose(ax.coords(), [1.0, 1.5, 2.0, 2.5])
        assert ax.coord(3) == 2.5

    def test_trimmed(self):
        ax = Axis("x", 0.0, 1.0, 10).trimmed(2)
        assert (ax.start, ax.count) == (2.0, 6)
        ax = Axis("x", 0.0, 1.0, 10).trimmed(1, 3)
        assert (ax.start, ax.count) == (1.0, 6)

    def test_rejects_bad_axes(self):
        with pytest.raises(ValidationError):
            Axis("x", 0.0, -0.1, 5)
        with pytest.raises(ValidationError):
            Axis("x", 0.0, 1.0, 1)


class TestSampledField:
    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            SampledField(axes=(Axis("t", 0, 1, 3),), values=np.zeros(4))

    def test_rejects_nan(self):
        vals = np.zeros((3, 4))
        vals[1, 2] = np.nan
        with pytest.raises(ValidationError):
            SampledField(axes=(Axis("t", 0, 1, 3), Axis("x", 0, 1, 4)), values=vals)

    def test_values_read_only(self):
        f = small_field()
        with pytest.raises(ValueError):
            f.values[0, 0] = 99.0

    def test_equality_and_hash(self):
        assert small_field() == small_field()
        assert hash(small_field()) == hash(small_field())


class TestMultiIndex:
    def test_total_and_per_axis(self):
        idx = MultiIndex(2, (1, 3))
        assert idx.total == 6
        assert idx.per_axis(3) == (2, 1, 3)

    def test_pads_missing_spatial_orders(self):
        assert MultiIndex(1, ()).per_axis(2) == (1, 0)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            MultiIndex(-1, (0,))


class TestCsvRoundTrip:
    def test_bit_exact(self, tmp_path):
        f = small_field()
        path = tmp_path / "f.csv"
        export_csv(f, path)
        g = ingest_csv(path)
        assert g == f

    def test_awkward_values_roundtrip(self, tmp_path):
        axes = (Axis("t", 0.0, 1e-7, 2), Axis("x", -3.0, np.pi, 2))
        vals = np.array([[1e-300, -1.2345678901234567e17], [0.1, 7.0]])
        f = SampledField(axes=axes, values=vals, label="awkward")
        path = tmp_path / "f.csv"
        export_csv(f, path)
        assert np.array_equal(ingest_csv(path).values, vals)

    def test_extra_comments_ignored(self, tmp_path):
        f = small_field()
        path = tmp_path / "f.csv"
        export_csv(f, path)
        text = path.read_text().splitlines()
        text.insert(1, "# manifest: something else")
        path.write_text("\n".join(text) + "\n")
        assert ingest_csv(path) == f

    @settings(max_examples=25, deadline=None)
    @given(
        nt=st.integers(2, 6),
        nx=st.integers(2, 6),
        data=st.data(),
    )
    def test_roundtrip_property(self, tmp_path_factory, nt, nx, data):
        vals = np.array(
            data.draw(
                st.lists(
                    st.floats(-1e12, 1e12, allow_nan=False),
                    min_size=nt * nx,
                    max_size=nt * nx,
                )
            )
        ).reshape(nt, nx)
        f = SampledField(
            axes=(Axis("t", 0.0, 0.1, nt), Axis("x", -1.0, 2.0, nx)), values=vals
        )
        path = tmp_path_factory.mktemp("rt") / "f.csv"
        export_csv(f, path)
        assert ingest_csv(path) == f


class TestIngestErrors:
    def test_missing_cell(self, tmp_path):
        f = small_field()
        path = tmp_path / "f.csv"
        export_csv(f, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(IncompleteGridError):
            ingest_csv(path)

    def test_bad_row(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("# axes: t:0:1:2, x:0:1:2\n# label: z\n0,0,1.0\n0,1,oops\n1,0,1\n1,1,1\n")
        with pytest.raises(FormatError):
            ingest_csv(path)

    def test_index_out_of_range(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("# axes: t:0:1:2, x:0:1:2\n# label: z\n0,0,1.0\n0,5,2.0\n")
        with pytest.raises(FormatError):
            ingest_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("# axes: t:0:1:2, x:0:1:2\n")
        with pytest.raises(FormatError):
            ingest_csv(path)


class TestCoordinateFormat:
    def test_basic(self, tmp_path):
        path = tmp_path / "c.csv"
        rows = ["t,x,value"]
        for i in range(3):
            for j in range(4):
                rows.append(f"{i * 0.5},{j * 0.25},{i + j}")
        path.write_text("\n".join(rows) + "\n")
        f = ingest_csv(path)
        assert f.shape == (3, 4)
        assert f.axes[0].step == 0.5
        assert f.values[2, 3] == 5.0

    def test_headerless(self, tmp_path):
        path = tmp_path / "c.csv"
        rows = [f"{i},{j},{i * 10 + j}" for i in range(2) for j in range(3)]
        path.write_text("\n".join(rows) + "\n")
        f = ingest_csv(path)
        assert f.shape == (2, 3)

    def test_non_uniform(self, tmp_path):
        path = tmp_path / "c.csv"
        rows = []
        for tv in (0.0, 1.0):
            for xv in (0.0, 1.0, 2.5):
                rows.append(f"{tv},{xv},1.0")
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(NonUniformGridError):
            ingest_csv(path)

    def test_missing_point(self, tmp_path):
        path = tmp_path / "c.csv"
        rows = [f"{tv},{xv},1.0" for tv in (0.0, 1.0) for xv in (0.0, 1.0, 2.0)]
        path.write_text("\n".join(rows[:-1]) + "\n")
        with pytest.raises(IncompleteGridError):
            ingest_csv(path)
