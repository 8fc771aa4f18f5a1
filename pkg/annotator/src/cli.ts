#!/usr/bin/env node
import { annotateFrames, discoverFrames, writeAnnotations } from './annotate.js';
import { FakeBackend, VisionBackend } from './backends.js';
import { loadRegistry } from './types.js';
import { validateFile } from './validate.js';

const USAGE = `usage:
  tourforge-annotate annotate --frames DIR --registry PATH --out FILE [--fake-backend] [--rate HZ]
  tourforge-annotate validate --file FILE --registry PATH

annotate runs a vision backend over every frame under --frames (one
subdirectory per video, or a flat directory for a single video) and
writes line-delimited JSON annotations to --out, then re-checks the
file against the consumer's strict schema. validate re-checks an
existing file. Exit is 0 on success, 1 on violations or runtime
failure, 2 on a usage error.`;

function usageError(message: string): never {
  console.error(message);
  console.error(USAGE);
  process.exit(2);
}

function parseFlags(argv: string[], valueFlags: string[], boolFlags: string[]): Map<string, string | true> {
  const flags = new Map<string, string | true>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (boolFlags.includes(arg)) {
      flags.set(arg, true);
    } else if (valueFlags.includes(arg)) {
      const value = argv[i + 1];
      if (value === undefined || value.startsWith('--')) usageError(`${arg} needs a value`);
      flags.set(arg, value);
      i++;
    } else {
      usageError(`unknown argument: ${arg}`);
    }
  }
  return flags;
}

function requireFlag(flags: Map<string, string | true>, name: string): string {
  const value = flags.get(name);
  if (typeof value !== 'string') usageError(`${name} is required`);
  return value;
}

function pickBackend(useFake: boolean): VisionBackend {
  if (useFake) return new FakeBackend();
  // model weights are not shipped with this package
  console.error('no vision backend is bundled with this build.');
  console.error('hint: pass --fake-backend for the deterministic stand-in, or install a model backend.');
  process.exit(1);
}

function runAnnotate(argv: string[]): number {
  const flags = parseFlags(argv, ['--frames', '--registry', '--out', '--rate'], ['--fake-backend']);
  const framesDir = requireFlag(flags, '--frames');
  const registryPath = requireFlag(flags, '--registry');
  const outPath = requireFlag(flags, '--out');
  const rate = flags.has('--rate') ? Number(flags.get('--rate')) : 0.5;
  if (!Number.isFinite(rate) || rate <= 0) usageError('--rate must be a positive number');

  const registry = loadRegistry(registryPath);
  const backend = pickBackend(flags.get('--fake-backend') === true);

  const sources = discoverFrames(framesDir, rate);
  const { records, skipped } = annotateFrames(sources, backend, registry.length);
  writeAnnotations(records, outPath);
  console.log(
    `annotated ${records.length} frames across ` +
      `${new Set(records.map((r) => r.video_id)).size} videos with backend '${backend.name}'` +
      (skipped.length ? ` (${skipped.length} skipped)` : '')
  );

  const violations = validateFile(outPath, registry.length);
  for (const v of violations) console.error(`${outPath}:${v.line}: ${v.message}`);
  if (violations.length) {
    console.error(`${violations.length} schema violations; the consumer would reject this file`);
    return 1;
  }
  console.log(`${outPath} passes strict schema checks`);
  return 0;
}

function runValidate(argv: string[]): number {
  const flags = parseFlags(argv, ['--file', '--registry'], []);
  const filePath = requireFlag(flags, '--file');
  const registry = loadRegistry(requireFlag(flags, '--registry'));

  const violations = validateFile(filePath, registry.length);
  for (const v of violations) console.error(`${filePath}:${v.line}: ${v.message}`);
  if (violations.length) return 1;
  console.log(`${filePath}: ok`);
  return 0;
}

function main(): void {
  const [command, ...rest] = process.argv.slice(2);
  try {
    if (command === 'annotate') process.exit(runAnnotate(rest));
    if (command === 'validate') process.exit(runValidate(rest));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
  usageError(command ? `unknown command: ${command}` : 'missing command');
}

main();
