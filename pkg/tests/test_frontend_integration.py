"""Cross-language check: the dashboard's API layer drives a live node.

Runs the frontend's integration test (compiled TypeScript, node --test)
against the in-process marketplace. Skips when the frontend has not been
built or node is unavailable; every backend test stays green without it.
"""

from __future__ import annotations

import os
import shutil
import subprocess
from pathlib import Path

import pytest

FRONTEND = Path(__file__).resolve().parent.parent / "frontend"
COMPILED = FRONTEND / "dist" / "tests" / "integration.test.js"


@pytest.mark.skipif(shutil.which("node") is None, reason="node not installed")
@pytest.mark.skipif(not COMPILED.is_file(), reason="frontend not built (npm run build)")
def test_dashboard_flow_through_compiled_frontend(market):
    env = dict(os.environ, CHAINMARKET_NODE=market.client_url)
    proc = subprocess.run(
        ["node", "--test", str(COMPILED)],
        cwd=FRONTEND,
        env=env,
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "# pass 1" in proc.stdout
