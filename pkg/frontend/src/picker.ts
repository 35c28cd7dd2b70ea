import { TaxonomyView } from './taxonomy';

/** Shortcut keys for the reduced set: digits for the nine top-level acts,
 * letters for the specific acts, in reduced-set order. */
export function reducedShortcuts(taxonomy: TaxonomyView): Map<string, string> {
  const keys = ['1', '2', '3', '4', '5', '6', '7', '8', '9',
                'q', 'w', 'e', 'r', 't', 'y', 'u', 'i', 'o'];
  const map = new Map<string, string>();
  taxonomy.reduced.forEach((labelId, i) => {
    if (i < keys.length) map.set(keys[i], labelId);
  });
  return map;
}

/** Hierarchical label picker: drill down from the nine top-level acts,
 * fuzzy-search the full set, or hit a reduced-set shortcut. Commit surfaces
 * priority-rule hints first when the chosen label is deprioritized by a
 * rule. Every option rendered comes from the fetched taxonomy. */
export class LabelPicker {
  readonly element: HTMLElement;
  private taxonomy: TaxonomyView;
  private path: string | null = null; // current tree position (null = roots)
  private reducedOnly = false;
  private pendingChoice: string | null = null;
  private context = '';
  onCommit: (labelId: string) => void = () => {};

  constructor(taxonomy: TaxonomyView) {
    this.taxonomy = taxonomy;
    this.element = document.createElement('div');
    this.element.className = 'picker';
    this.render();
  }

  /** The dialogue situation used for priority-rule matching. */
  setContext(context: string): void {
    this.context = context;
  }

  setReducedOnly(on: boolean): void {
    this.reducedOnly = on;
    this.path = null;
    this.render();
  }

  openAt(path: string | null): void {
    this.path = path;
    this.pendingChoice = null;
    this.render();
  }

  choose(labelId: string): void {
    if (!this.taxonomy.has(labelId)) {
      throw new Error(`label ${labelId} is not in the taxonomy`);
    }
    const hints = this.taxonomy.hintsFor(labelId, this.context);
    if (hints.length > 0) {
      this.pendingChoice = labelId;
      this.render();
      return;
    }
    this.commit(labelId);
  }

  confirmPending(usePreferred: boolean): void {
    if (this.pendingChoice === null) return;
    const hints = this.taxonomy.hintsFor(this.pendingChoice, this.context);
    const label =
      usePreferred && hints.length > 0 ? hints[0].rule.prefer : this.pendingChoice;
    this.commit(label);
  }

  handleKey(key: string): boolean {
    const shortcut = reducedShortcuts(this.taxonomy).get(key);
    if (shortcut) {
      this.choose(shortcut);
      return true;
    }
    return false;
  }

  private commit(labelId: string): void {
    this.pendingChoice = null;
    this.render();
    this.onCommit(labelId);
  }

  private options(): string[] {
    if (this.reducedOnly) return this.taxonomy.reduced;
    return this.taxonomy.childrenOf(this.path);
  }

  render(): void {
    this.element.replaceChildren();

    const search = document.createElement('input');
    search.type = 'search';
    search.placeholder = 'search labels';
    search.className = 'picker-search';
    search.addEventListener('input', () => {
      this.renderResults(search.value);
    });
    this.element.append(search);

    const crumbs = document.createElement('div');
    crumbs.className = 'crumbs';
    const rootBtn = document.createElement('button');
    rootBtn.textContent = 'top level';
    rootBtn.addEventListener('click', () => this.openAt(null));
    crumbs.append(rootBtn);
    if (this.path !== null) {
      for (const anc of this.taxonomy.ancestors(this.path)) {
        const btn = document.createElement('button');
        btn.textContent = anc;
        btn.addEventListener('click', () => this.openAt(anc));
        crumbs.append(btn);
      }
    }
    this.element.append(crumbs);

    const list = document.createElement('div');
    list.className = 'picker-options';
    this.element.append(list);
    this.renderOptions(list);

    const results = document.createElement('div');
    results.className = 'picker-results';
    this.element.append(results);

    if (this.pendingChoice !== null) {
      this.renderHint();
    }
  }

  private renderOptions(list: HTMLElement): void {
    const shortcuts = reducedShortcuts(this.taxonomy);
    const keyFor = new Map<string, string>();
    for (const [key, labelId] of shortcuts) keyFor.set(labelId, key);
    for (const id of this.options()) {
      const row = document.createElement('div');
      row.className = 'picker-option';
      row.dataset.labelId = id;
      const pick = document.createElement('button');
      pick.className = 'pick';
      pick.textContent = id;
      pick.addEventListener('click', () => this.choose(id));
      row.append(pick);
      const key = keyFor.get(id);
      if (key) {
        const kbd = document.createElement('kbd');
        kbd.textContent = key;
        row.append(kbd);
      }
      const label = this.taxonomy.byId.get(id)!;
      if (label.description) {
        row.title = label.description;
      }
      if (!this.reducedOnly && this.taxonomy.childrenOf(id).length > 0) {
        const drill = document.createElement('button');
        drill.className = 'drill';
        drill.textContent = '>';
        drill.addEventListener('click', () => this.openAt(id));
        row.append(drill);
      }
      list.append(row);
    }
  }

  private renderResults(query: string): void {
    const results = this.element.querySelector('.picker-results')!;
    results.replaceChildren();
    for (const id of this.taxonomy.search(query)) {
      const btn = document.createElement('button');
      btn.className = 'result';
      btn.dataset.labelId = id;
      btn.textContent = id;
      btn.addEventListener('click', () => this.choose(id));
      results.append(btn);
    }
  }

  private renderHint(): void {
    const hints = this.taxonomy.hintsFor(this.pendingChoice!, this.context);
    const box = document.createElement('div');
    box.className = 'priority-hint';
    const [first] = hints;
    const text = document.createElement('p');
    text.textContent =
      `Priority note: prefer ${first.rule.prefer} over ${first.rule.over}` +
      (first.rule.note ? ` - ${first.rule.note}` : '');
    if (first.applies) {
      box.classList.add('applies');
      text.textContent += ' (the current context matches this rule)';
    }
    box.append(text);
    const usePreferred = document.createElement('button');
    usePreferred.className = 'use-preferred';
    usePreferred.textContent = `use ${first.rule.prefer}`;
    usePreferred.addEventListener('click', () => this.confirmPending(true));
    const keep = document.createElement('button');
    keep.className = 'keep-choice';
    keep.textContent = `keep ${this.pendingChoice}`;
    keep.addEventListener('click', () => this.confirmPending(false));
    box.append(usePreferred, keep);
    this.element.append(box);
  }
}
