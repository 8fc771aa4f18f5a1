import * as fs from 'fs';

export const ROOM_TYPE_COUNT = 12;

export const ACTION_LABELS = ['forward', 'left', 'right'] as const;

export type ActionLabel = (typeof ACTION_LABELS)[number];

export interface DetectedObject {
  label: string;
  score: number;
}

// One line of the annotations file. Field set and ranges mirror the
// consumer's strict parser; anything extra gets a line rejected.
export interface FrameAnnotation {
  video_id: string;
  frame_index: number;
  timestamp_s: number;
  room_probs: number[];
  person: boolean;
  outdoor: boolean;
  objects: DetectedObject[];
  region_count: number;
  yaw_deg?: number;
  action_to_next?: ActionLabel;
}

export function loadRegistry(path: string): string[] {
  const lines = fs
    .readFileSync(path, 'utf-8')
    .split('\n')
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length !== ROOM_TYPE_COUNT) {
    throw new Error(`registry must list exactly ${ROOM_TYPE_COUNT} room types, got ${lines.length}`);
  }
  if (new Set(lines).size !== lines.length) {
    throw new Error('registry contains duplicate room types');
  }
  return lines;
}
