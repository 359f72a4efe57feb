/** Attribute toggle panel state, names fixed by the served model. */

export type Toggles = Record<string, 0 | 1>;

export class AttributePanelState {
  readonly names: string[];
  private values: Map<string, 0 | 1>;

  constructor(names: string[]) {
    this.names = [...names];
    this.values = new Map(this.names.map((n) => [n, 0]));
  }

  set(name: string, value: 0 | 1): void {
    if (!this.values.has(name)) throw new Error(`unknown attribute ${name}`);
    this.values.set(name, value);
  }

  get(name: string): 0 | 1 {
    const v = this.values.get(name);
    if (v === undefined) throw new Error(`unknown attribute ${name}`);
    return v;
  }

  toggle(name: string): void {
    this.set(name, this.get(name) ? 0 : 1);
  }

  /** Exactly what gets sent: every known name mapped to its bit. */
  toggles(): Toggles {
    const out: Toggles = {};
    for (const n of this.names) out[n] = this.get(n);
    return out;
  }

  vector(): number[] {
    return this.names.map((n) => this.get(n));
  }
}

export const GRID_MODE_MAX_ATTRIBUTES = 4;

/**
 * All attribute combinations for grid mode, first attribute varying
 * fastest: for two attributes exactly [0,0], [1,0], [0,1], [1,1].
 */
export function gridVectors(names: string[]): Toggles[] {
  if (names.length === 0 || names.length > GRID_MODE_MAX_ATTRIBUTES) {
    throw new Error(`grid mode supports 1..${GRID_MODE_MAX_ATTRIBUTES} attributes, got ${names.length}`);
  }
  const combos: Toggles[] = [];
  for (let i = 0; i < 1 << names.length; i++) {
    const toggles: Toggles = {};
    names.forEach((name, j) => {
      toggles[name] = ((i >> j) & 1) as 0 | 1;
    });
    combos.push(toggles);
  }
  return combos;
}
