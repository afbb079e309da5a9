"""
Coverage heatmaps over the orchard
==================================

Evaluate several models on a 1 m grid over a 43 m x 38 m field and write
the RSSI maps as PGM images you can open in most image viewers.
"""

from pathlib import Path

from orchardprop import ModelParams, RadioConfig, model_heatmap, palermo_grid, palermo_layout
from orchardprop.simulate import heatmap_pgm

layout = palermo_layout()
grid = palermo_grid(1.0)
radio = RadioConfig(868.0, 21.0)
params = ModelParams(exponent=2.3, canopy_loss_db=1.8)

# Node in the first corridor, near the west edge.
tx = (3.7, 4.76)
out = Path("heatmaps")
out.mkdir(exist_ok=True)

maps = {m: model_heatmap(layout, m, params, radio, tx, grid, workers=4)
        for m in ("fspl", "itu", "pmw", "proposed")}

# A common colour scale makes the maps comparable side by side.
lo = min(hm.values.min() for hm in maps.values())
hi = max(hm.values.max() for hm in maps.values())
for name, hm in maps.items():
    (out / f"{name}.pgm").write_text(heatmap_pgm(hm, lo, hi))
    print(f"{name:9s} RSSI from {hm.values.min():7.2f} to {hm.values.max():7.2f} dBm")

# The proposed map shows bands along the corridors: moving along a row costs
# less than cutting across it.
