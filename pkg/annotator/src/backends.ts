import { createHash } from 'crypto';

import { ActionLabel, DetectedObject, ROOM_TYPE_COUNT } from './types.js';

export interface FrameSignals {
  roomProbs: number[];
  person: boolean;
  outdoor: boolean;
  objects: DetectedObject[];
  regionCount: number;
  yawDeg: number;
  actionToNext?: ActionLabel;
}

// A backend turns raw frame bytes into per-frame signals. Real model
// backends (zero-shot room classifier, person/outdoor detectors, an
// object detector) plug in behind this; tests and offline runs use the
// deterministic fake below.
export interface VisionBackend {
  readonly name: string;
  annotateFrame(bytes: Buffer): FrameSignals;
}

const ACTIONS: ActionLabel[] = ['forward', 'left', 'right'];

const OBJECT_LEXICON = [
  'sofa', 'table', 'lamp', 'oven', 'sink', 'mirror',
  'shelf', 'rug', 'plant', 'desk', 'bed', 'chair',
];

/**
 * Deterministic stand-in backend: every signal is a pure function of
 * the sha256 digest of the frame bytes, so identical inputs always
 * produce identical annotations and no model weights are needed.
 */
export class FakeBackend implements VisionBackend {
  readonly name = 'fake';

  annotateFrame(bytes: Buffer): FrameSignals {
    const d = createHash('sha256').update(bytes).digest();

    const raw: number[] = [];
    for (let i = 0; i < ROOM_TYPE_COUNT; i++) raw.push(d[i] + 1);
    const total = raw.reduce((a, b) => a + b, 0);
    const roomProbs = raw.map((v) => v / total);

    // person/outdoor flags are rare so most frames survive filtering
    const person = d[12] > 250;
    const outdoor = d[13] > 250;

    const objects: DetectedObject[] = [];
    const objectCount = d[18] % 3;
    for (let i = 0; i < objectCount; i++) {
      objects.push({
        label: OBJECT_LEXICON[(d[19] + i) % OBJECT_LEXICON.length],
        score: d[(20 + i) % 32] / 255,
      });
    }

    const yawDeg = ((d[14] * 256 + d[15]) / 65536) * 360 - 180;
    const signals: FrameSignals = {
      roomProbs,
      person,
      outdoor,
      objects,
      regionCount: 1 + (d[21] % 5),
      yawDeg,
    };
    if (d[16] < 128) {
      signals.actionToNext = ACTIONS[d[17] % 3];
    }
    return signals;
  }
}

export function resolveBackend(name: string): VisionBackend {
  if (name === 'fake') return new FakeBackend();
  throw new Error(
    `backend '${name}' is not available in this build; ` +
      'install a model backend or pass --fake-backend for the deterministic stand-in'
  );
}
