import json

import numpy as np
import pytest

from uscompound.cli import run
from uscompound.config import Config, load_config, merge_config
from uscompound.errors import SpecError
from uscompound.image import Image, load_image, save_image


@pytest.fixture
def phantom_dir(tmp_path):
    """Two-view phantom rendered to disk via the synth subcommand."""
    spec = {
        "width": 96, "height": 96,
        "vessel": {"cx": 48, "cy": 60, "a": 20, "b": 14,
                   "wall_thickness": 3, "wall_intensity": 0.85},
        "reflectors": [{"row": 16, "col_start": 20, "col_end": 76,
                        "intensity": 0.9,
                        "reverb": {"count": 2, "spacing": 10, "decay": 0.6}}],
        "speckle": {"scale": 0.02, "seed": 5},
        "views": [{}, {"rotation": 1.5707963267948966, "dx": 95.0}],
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    outdir = tmp_path / "scene"
    assert run(["synth", "--spec", str(spec_path), "--outdir", str(outdir)]) == 0
    return outdir


def _view_args(outdir):
    return ["--view", f"{outdir}/view0.pgm:{outdir}/view0_transform.json",
            "--view", f"{outdir}/view1.pgm:{outdir}/view1_transform.json"]


def test_confidence_subcommand(tmp_path, phantom_dir):
    out = tmp_path / "gc.fmap"
    assert run(["confidence", "--image", f"{phantom_dir}/view0.pgm",
                "--out", str(out)]) == 0
    c = load_image(out)
    assert np.all(c.data[0] == 1.0)


def test_boundaries_subcommand(tmp_path, phantom_dir):
    out = tmp_path / "mask.pgm"
    assert run(["boundaries", "--image", f"{phantom_dir}/view0.pgm",
                "--out", str(out)]) == 0
    mask = load_image(out).data
    assert set(np.unique(mask)).issubset({0.0, 1.0})


@pytest.mark.parametrize("method", ["average", "maximum", "ubf", "pyramid"])
def test_compound_subcommand(tmp_path, phantom_dir, method):
    out = tmp_path / "out.pgm"
    rc = run(["compound", "--method", method, *_view_args(phantom_dir),
              "--out", str(out)])
    assert rc == 0
    assert load_image(out).width == 96


def test_compound_average_duplicates_identity(tmp_path, phantom_dir):
    out = tmp_path / "o.pgm"
    ident = f"{phantom_dir}/view0.pgm:{phantom_dir}/view0_transform.json"
    assert run(["compound", "--method", "average", "--view", ident,
                "--view", ident, "--out", str(out)]) == 0
    src = load_image(f"{phantom_dir}/view0.pgm").data
    assert np.abs(load_image(out).data - src).max() < 1 / 255


def test_compound_provenance_log(tmp_path, phantom_dir, capsys):
    out = tmp_path / "o.pgm"
    run(["compound", "--method", "pyramid", *_view_args(phantom_dir),
         "--out", str(out)])
    log = json.loads(capsys.readouterr().err.strip().splitlines()[0])
    assert log["effective_config"]["compound"]["gamma"] == 0.05


def test_dump_intermediates(tmp_path, phantom_dir):
    out = tmp_path / "o.pgm"
    dump = tmp_path / "layers"
    assert run(["compound", "--method", "pyramid", *_view_args(phantom_dir),
                "--out", str(out), "--dump-intermediates", str(dump)]) == 0
    names = {p.name for p in dump.iterdir()}
    assert "blended_layer1.fmap" in names
    assert "partial_layer3_pre_enhance.fmap" in names


def test_metrics_subcommand(tmp_path, phantom_dir, capsys):
    out = tmp_path / "o.pgm"
    run(["compound", "--method", "average", *_view_args(phantom_dir),
         "--out", str(out)])
    patches = tmp_path / "patches.json"
    patches.write_text(json.dumps([
        {"x": 24, "y": 22, "width": 40, "height": 16, "label": "artifact"},
        {"x": 20, "y": 12, "width": 56, "height": 8, "label": "boundary"},
    ]))
    report_path = tmp_path / "report.json"
    assert run(["metrics", "--image", str(out), "--patches", str(patches),
                "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["artifact_avr"] >= 0
    assert report["boundary_avr"] >= 0


def test_segment_subcommand(tmp_path):
    # bright ring: segmentation succeeds
    h = w = 64
    yy, xx = np.mgrid[0:h, 0:w]
    r = np.hypot(xx - 32, yy - 32)
    img = np.where(np.abs(r - 20) < 2, 0.9, 0.05).astype(np.float32)
    path = tmp_path / "ring.pgm"
    save_image(Image(img), path)
    assert run(["segment", "--image", str(path), "--patch", "0,0,64,64",
                "--out", str(tmp_path / "m.pgm")]) == 0


def test_segment_dark_patch_exit3(tmp_path):
    path = tmp_path / "dark.pgm"
    save_image(Image(np.zeros((32, 32))), path)
    assert run(["segment", "--image", str(path), "--patch", "0,0,32,32"]) == 3


def test_usage_error_exit1():
    assert run(["compound", "--method", "bogus"]) == 1
    assert run([]) == 1


def test_data_error_exit2(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"nonsense")
    assert run(["boundaries", "--image", str(bad),
                "--out", str(tmp_path / "o.pgm")]) == 2


def test_config_defaults_match_documented_constants():
    cfg = Config()
    b = cfg.boundary_params()
    assert (b.alpha, b.beta, b.min_size, b.t1, b.t2) == (15, 20, 50, 30.0, 2.0)
    p = cfg.pyramid_params()
    assert (p.levels, p.gamma, p.enhance_layer) == (5, 0.05, 3)


def test_config_unknown_key_rejected():
    with pytest.raises(SpecError):
        Config({"boundary": {"alhpa": 3}})
    with pytest.raises(SpecError):
        merge_config({"a": 1}, {"b": 2})


def test_config_roundtrip_noop(tmp_path):
    cfg = Config({"compound": {"gamma": 0.1}})
    path = tmp_path / "cfg.json"
    path.write_text(cfg.dump())
    again = load_config(path)
    assert again.values == cfg.values
    assert again.dump() == cfg.dump()


def test_config_overrides_applied(tmp_path, phantom_dir):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"pyramid": {"K": 4},
                               "compound": {"enhance_layer": 2}}))
    out = tmp_path / "o.pgm"
    assert run(["compound", "--method", "pyramid", *_view_args(phantom_dir),
                "--out", str(out), "--config", str(cfg)]) == 0
