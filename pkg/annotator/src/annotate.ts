import * as fs from 'fs';
import * as path from 'path';

import { VisionBackend } from './backends.js';
import { FrameAnnotation } from './types.js';

export interface FrameSource {
  videoId: string;
  frameIndex: number;
  timestampS: number;
  filePath: string;
}

export interface AnnotateResult {
  records: FrameAnnotation[];
  skipped: { filePath: string; reason: string }[];
}

/**
 * Map a frames directory onto (video, frame) coordinates.
 *
 * Each immediate subdirectory is one video: its regular files, sorted
 * by name, become frames 0..n-1 at timestamps i / rateHz. A directory
 * with no subdirectories is treated as a single video named after the
 * directory itself.
 */
export function discoverFrames(framesDir: string, rateHz: number): FrameSource[] {
  if (rateHz <= 0) throw new Error('frame rate must be positive');
  const stat = fs.statSync(framesDir, { throwIfNoEntry: false });
  if (!stat || !stat.isDirectory()) {
    throw new Error(`frames directory not found: ${framesDir}`);
  }
  const entries = fs.readdirSync(framesDir, { withFileTypes: true });
  const subdirs = entries.filter((e) => e.isDirectory()).map((e) => e.name).sort();

  const videos: { videoId: string; dir: string }[] = [];
  if (subdirs.length > 0) {
    for (const name of subdirs) videos.push({ videoId: name, dir: path.join(framesDir, name) });
  } else {
    videos.push({ videoId: path.basename(path.resolve(framesDir)), dir: framesDir });
  }

  const sources: FrameSource[] = [];
  for (const video of videos) {
    const files = fs
      .readdirSync(video.dir, { withFileTypes: true })
      .filter((e) => e.isFile())
      .map((e) => e.name)
      .sort();
    files.forEach((name, index) => {
      sources.push({
        videoId: video.videoId,
        frameIndex: index,
        timestampS: index / rateHz,
        filePath: path.join(video.dir, name),
      });
    });
  }
  return sources;
}

function renormalize(probs: number[], expected: number): number[] {
  if (probs.length !== expected) {
    throw new Error(`backend returned ${probs.length} room probabilities, expected ${expected}`);
  }
  let total = 0;
  for (const p of probs) {
    if (!Number.isFinite(p) || p < 0) throw new Error('backend returned an invalid room probability');
    total += p;
  }
  if (total <= 0) throw new Error('backend returned an all-zero room distribution');
  return probs.map((p) => p / total);
}

/**
 * Run the backend over every discovered frame. Unreadable frame files
 * are skipped with a warning instead of failing the whole run; skipped
 * frames leave gaps in frame_index, which the consumer accepts.
 */
export function annotateFrames(
  sources: FrameSource[],
  backend: VisionBackend,
  registrySize: number,
  warn: (message: string) => void = (m) => console.warn(m)
): AnnotateResult {
  const records: FrameAnnotation[] = [];
  const skipped: { filePath: string; reason: string }[] = [];

  for (const source of sources) {
    let bytes: Buffer;
    try {
      bytes = fs.readFileSync(source.filePath);
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      warn(`skipping unreadable frame ${source.filePath}: ${reason}`);
      skipped.push({ filePath: source.filePath, reason });
      continue;
    }
    const signals = backend.annotateFrame(bytes);
    const record: FrameAnnotation = {
      video_id: source.videoId,
      frame_index: source.frameIndex,
      timestamp_s: source.timestampS,
      room_probs: renormalize(signals.roomProbs, registrySize),
      person: signals.person,
      outdoor: signals.outdoor,
      objects: signals.objects.map((o) => ({ label: o.label, score: o.score })),
      region_count: signals.regionCount,
      yaw_deg: signals.yawDeg,
    };
    if (signals.actionToNext !== undefined) record.action_to_next = signals.actionToNext;
    records.push(record);
  }

  records.sort((a, b) =>
    a.video_id < b.video_id ? -1 : a.video_id > b.video_id ? 1 : a.frame_index - b.frame_index
  );
  return { records, skipped };
}

export function writeAnnotations(records: FrameAnnotation[], outPath: string): void {
  const lines = records.map((r) => JSON.stringify(r));
  fs.writeFileSync(outPath, lines.length ? lines.join('\n') + '\n' : '');
}
