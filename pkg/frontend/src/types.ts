/** Wire shapes shared with the pareidolia service and its file formats. */

export interface FitResponse {
  controls: number[][];
  sampled_curve: number[][];
  residual: number;
}

/** GET /config payload: the active pipeline settings plus the labelable roles. */
export interface ServiceConfig {
  roles: string[];
  fit_segments: number;
  [key: string]: unknown;
}

export interface AnnotationBranchExport {
  role: string;
  points: number[][];
  n_controls: number;
}

export interface AnnotationExport {
  image: string;
  coordinate_origin: [number, number];
  branches: AnnotationBranchExport[];
}
