/** Overlay rendering of fitted curves.
 *
 * The client performs no curve math.  The polyline drawn over the image is
 * the service's sampled_curve verbatim — same array, same vertices — so the
 * overlay can never disagree with what the engine fitted.
 */
import type { FitResponse } from "./types.js";

/** The vertices to draw for a fit: the service's samples, untouched. */
export function overlayPolyline(fit: FitResponse): number[][] {
  return fit.sampled_curve;
}

export interface PathSink {
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
}

/** Trace a fit into a canvas-like path: one moveTo, then one lineTo per
 * remaining service vertex, nothing added or resampled. */
export function traceCurve(sink: PathSink, fit: FitResponse): number {
  const verts = overlayPolyline(fit);
  let drawn = 0;
  for (const v of verts) {
    const x = v[0];
    const y = v[1];
    if (x === undefined || y === undefined) {
      throw new Error("sampled_curve vertex is not an [x, y] pair");
    }
    if (drawn === 0) sink.moveTo(x, y);
    else sink.lineTo(x, y);
    drawn += 1;
  }
  return drawn;
}
