/** Action palette: manifest-driven buttons that compose exact engine text. */

import type { ActionPalette, ActionSpec, SessionDescriptor } from "./api.js";

export interface PaletteButton {
  name: string;
  arity: number;
  level: string;
  description: string;
  /** true when clicking needs an argument typed first */
  needsArgument: boolean;
}

export function paletteButtons(palette: ActionPalette): PaletteButton[] {
  return palette.actions.map((spec: ActionSpec) => ({
    name: spec.name,
    arity: spec.arity,
    level: spec.level,
    description: spec.description,
    needsArgument: spec.arity > 0,
  }));
}

/** The exact text the engine parses: `name`, `name [a]`, or `name [a, b]`. */
export function composeActionText(name: string, args: string[]): string {
  const trimmed = args.map((a) => a.trim()).filter((a) => a.length > 0);
  if (trimmed.length === 0) return name;
  return `${name} [${trimmed.join(", ")}]`;
}

/** Send controls are enabled only on the human's turn. */
export function canSend(descriptor: SessionDescriptor): boolean {
  return descriptor.status === "awaiting_human";
}

export function humanPalette(descriptor: SessionDescriptor): ActionPalette | null {
  const waiting = descriptor.waiting_human;
  if (waiting !== null && descriptor.action_palettes[waiting]) {
    return descriptor.action_palettes[waiting];
  }
  const firstHuman = descriptor.roles.find((role) => role.human);
  if (firstHuman && descriptor.action_palettes[firstHuman.agent_id]) {
    return descriptor.action_palettes[firstHuman.agent_id];
  }
  return null;
}
