"""A scripted session against the HTTP service: everything the browser
studio does, driven from Python.

Spawns `tiltshift serve` on a free port, writes a synthetic dataset,
then walks the documented endpoints end to end.
"""

import socket
import struct
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import requests

from tiltshift.lfio import save_dataset
from tiltshift.synthetic import make_scene, render_scene

with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]

workdir = Path(tempfile.mkdtemp(prefix="tiltshift-demo-"))
save_dataset(render_scene(make_scene(image_size=(64, 64), tilt_y=20.0)), workdir / "scene")

server = subprocess.Popen([sys.executable, "-m", "tiltshift.cli", "serve",
                           "--port", str(port)])
base = f"http://127.0.0.1:{port}"
try:
    for _ in range(100):
        try:
            requests.get(base + "/sessions/none", timeout=1)
            break
        except requests.ConnectionError:
            time.sleep(0.1)

    state = requests.post(base + "/sessions",
                          json={"dataset_path": str(workdir / "scene")}).json()
    sid = state["session_id"]
    print(f"session {sid}: {state['grid_rows']}x{state['grid_cols']} grid, "
          f"{state['width']}x{state['height']} views")

    cloud = requests.get(f"{base}/sessions/{sid}/pointcloud",
                         params={"max_points": 5000}).content
    (count,) = struct.unpack_from("<I", cloud)
    print(f"point cloud payload: {count} points, {len(cloud)} bytes")

    plane = requests.post(f"{base}/sessions/{sid}/plane",
                          json={"mode": "click", "uv": [32, 32]}).json()
    print(f"clicked plane: n={[round(x, 3) for x in plane['n']]}, d={plane['d']:.3f}")

    render = requests.post(f"{base}/sessions/{sid}/render",
                           json={"quality": "preview"}).json()
    png = requests.get(f"{base}/renders/{render['render_id']}")
    (workdir / "preview.png").write_bytes(png.content)
    print(f"preview render: {render['stats']['width']}x{render['stats']['height']}, "
          f"coverage mean {render['stats']['coverage_mean']:.3f}")

    requests.post(f"{base}/sessions/{sid}/plane",
                  json={"mode": "adjust", "drot_y": 5.0})
    again = requests.post(f"{base}/sessions/{sid}/render",
                          json={"quality": "preview"}).json()
    print(f"after +5 deg tilt adjust: new render cached={again['cached']}")
    print(f"outputs in {workdir}")
finally:
    server.terminate()
    server.wait(timeout=10)
