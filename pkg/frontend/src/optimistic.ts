import type { UiAction } from "./actions.js";

/** One child currently placed in the sandbox, as the GUI draws it. */
export interface Occupant {
  ninu: string;
  item: number | null;
  posx: number;
  posy: number;
}

export interface PlaygroundView {
  occupants: Occupant[];
}

/** Opaque frozen snapshot used for exact reversal. */
export type Snapshot = string;

/**
 * Optimistic sandbox state: actions are applied to the view immediately
 * and reversed to the exact prior snapshot when the gateway says no.
 */
export class OptimisticPlayground {
  private view: PlaygroundView = { occupants: [] };

  load(occupants: Occupant[]): void {
    this.view = { occupants: occupants.map((o) => ({ ...o })) };
  }

  current(): PlaygroundView {
    return JSON.parse(this.snapshot());
  }

  snapshot(): Snapshot {
    return JSON.stringify(this.view);
  }

  restore(snapshot: Snapshot): void {
    this.view = JSON.parse(snapshot);
  }

  /** Apply the action's predicted effect; returns the prior snapshot. */
  apply(action: UiAction): Snapshot {
    const prior = this.snapshot();
    const occupants = this.view.occupants;
    switch (action.kind) {
      case "place-child":
        occupants.push({
          ninu: action.ninu!,
          item: action.item ?? null,
          posx: action.posx!,
          posy: action.posy!,
        });
        break;
      case "remove-child":
        this.view.occupants = occupants.filter((o) => o.ninu !== action.ninu);
        break;
      case "move-child":
        for (const o of occupants) {
          if (o.ninu === action.ninu) {
            o.posx = action.posx!;
            o.posy = action.posy!;
          }
        }
        break;
      case "give-toy":
        for (const o of occupants) {
          if (o.ninu === action.ninu) o.item = action.item!;
        }
        break;
      case "return-toy":
        for (const o of occupants) {
          if (o.ninu === action.ninu) o.item = null;
        }
        break;
      case "raw-sql":
        break; // no predicted view change for free-form SQL
    }
    return prior;
  }
}
