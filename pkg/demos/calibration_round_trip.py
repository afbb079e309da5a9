"""
Fitting the exponent and per-canopy loss
========================================

Generate noisy RSSI readings from known parameters, fit them back, and
compare the error of the fitted models against the ITU foliage model.
"""

import numpy as np

from orchardprop import (ModelParams, Point2D, RadioConfig, dataset_from_rssi, error_heatmap,
                         fit_canopy_model, model_heatmap, palermo_grid, palermo_layout)

layout = palermo_layout()
grid = palermo_grid()
radio = RadioConfig(868.0, 21.0)
truth = ModelParams(exponent=2.3, canopy_loss_db=1.8)
tx = Point2D(3.7, 4.76)

# One reading per grid cell with 2 dB Gaussian shadowing.
clean = model_heatmap(layout, "proposed", truth, radio, tx, grid)
xs, ys = grid.centers()
points = [Point2D(float(x), float(y)) for x, y in zip(xs.ravel(), ys.ravel())]
noise = np.random.default_rng(0).normal(0.0, 2.0, len(points))
data = dataset_from_rssi(points, clean.values.ravel() + noise, radio, layout, tx)

# Grid-aligned distance for the proposed model, straight-line for the
# plantation multi-wall baseline.
for metric, model in (("manhattan", "proposed"), ("euclid", "pmw")):
    fit = fit_canopy_model(data, layout, radio, metric)
    hm = model_heatmap(layout, model, fit.params, radio, tx, grid)
    err = error_heatmap(data, hm)
    print(f"{model:9s} n={fit.params.exponent:.3f}  L={fit.params.canopy_loss_db:.2f} dB  "
          f"RMSE={err.rmse_db:.2f} dB")

itu = error_heatmap(data, model_heatmap(layout, "itu", truth, radio, tx, grid))
print(f"{'itu':9s} RMSE={itu.rmse_db:.2f} dB")
