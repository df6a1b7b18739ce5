import os
import subprocess
import sys

import pytest

from otfsynth import kernel


def _backend(env_extra):
    env = {**os.environ, **env_extra}
    out = subprocess.run(
        [sys.executable, "-c", "import otfsynth.kernel as k; print(k.BACKEND, k.Classifier.__module__)"],
        env=env, capture_output=True, text=True, check=True,
    )
    return out.stdout.split()


def test_pure_fallback_selected_by_env():
    assert _backend({"OTFSYNTH_PURE": "1"}) == ["python", "otfsynth._kernel_py"]


@pytest.mark.skipif(kernel.CClassifier is None, reason="compiled kernel not built")
def test_compiled_kernel_is_default():
    assert kernel.BACKEND == "cython"
    assert _backend({"OTFSYNTH_PURE": ""})[0] == "cython"


def test_classifier_api(kernel_cls):
    c = kernel_cls()
    for marked in (False, True):
        c.add_state(marked)
    assert not c.discover(0, 1, 0)
    assert c.get_status(0) == kernel.UNDECIDED
    assert not c.discover(1, 1, 0)
    c.add_edge(0, 1, True, False)
    new_w, new_l = c.add_edge(1, 1, True, False)
    assert sorted(new_w) == [0, 1] and not new_l
    assert list(c.status_list) == [kernel.WIN, kernel.WIN]
    d = kernel_cls()
    d.add_state(True)
    assert d.discover(0, 0, 0)  # deadlock
    assert d.get_status(0) == kernel.LOSE
