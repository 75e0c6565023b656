// Structure-only parsing of the service's rendered rule text. The rendered
// form is a flat disjunction of bracketed conjunctions in path order, with
// feature arguments in single quotes (backslash escapes inside).

function splitOutsideQuotes(text: string, sep: string): string[] {
  const parts: string[] = [];
  let current = "";
  let inQuote = false;
  let escaped = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (inQuote) {
      current += ch;
      if (escaped) escaped = false;
      else if (ch === "\\") escaped = true;
      else if (ch === "'") inQuote = false;
      continue;
    }
    if (ch === "'") {
      inQuote = true;
      current += ch;
      continue;
    }
    if (text.startsWith(sep, i)) {
      parts.push(current);
      current = "";
      i += sep.length - 1;
      continue;
    }
    current += ch;
  }
  parts.push(current);
  return parts;
}

/**
 * Rendered rule text -> one feature list per path, in the order the
 * service reports paths. Quoted arguments never split a group even if
 * they contain brackets or the words AND / OR.
 */
export function splitDnf(rendered: string): string[][] {
  const groups: string[] = [];
  let depth = 0;
  let inQuote = false;
  let escaped = false;
  let current = "";
  for (const ch of rendered) {
    if (inQuote) {
      current += ch;
      if (escaped) escaped = false;
      else if (ch === "\\") escaped = true;
      else if (ch === "'") inQuote = false;
      continue;
    }
    if (ch === "'") {
      inQuote = true;
      current += ch;
      continue;
    }
    if (ch === "[") {
      depth += 1;
      if (depth === 1) {
        current = "";
        continue;
      }
    }
    if (ch === "]") {
      depth -= 1;
      if (depth === 0) {
        groups.push(current);
        current = "";
        continue;
      }
    }
    if (depth > 0) current += ch;
  }
  if (groups.length === 0 && rendered.trim()) groups.push(rendered.trim());
  return groups.map((group) =>
    splitOutsideQuotes(group, " AND ").map((f) => f.trim()).filter(Boolean),
  );
}

const ENTITY_FORMS: Record<string, string> = {
  "entity.person": "entity_person.in_group",
  "entity.organization": "entity_org.in_group",
  "entity.location": "entity_location.in_group",
};

function unescapeArg(arg: string): string {
  let out = "";
  let escaped = false;
  for (const ch of arg) {
    if (escaped) {
      out += ch;
      escaped = false;
    } else if (ch === "\\") {
      escaped = true;
    } else {
      out += ch;
    }
  }
  return out;
}

/**
 * Canonical "function.operator|argument" key for a rendered feature like
 * "Tweets.Keyword.Contains('flu')", or null when the text does not look
 * like a feature. Used to match adaptation log entries to tree nodes.
 */
export function renderedFeatureKey(feature: string): string | null {
  const text = feature.startsWith("NOT ") ? feature.slice(4) : feature;
  const m = /^[^.]+\.(.+)\('((?:[^'\\]|\\.)*)'\)$/.exec(text);
  if (!m) return null;
  const dotted = m[1].toLowerCase();
  const op = ENTITY_FORMS[dotted] ?? dotted;
  return `${op}|${unescapeArg(m[2])}`;
}

/** Same canonical key for an action log label like "keyword.contains(flu)". */
export function actionFeatureKey(label: string): string | null {
  const text = label.startsWith("NOT ") ? label.slice(4) : label;
  const m = /^([a-z_]+\.[a-z_]+)\((.*)\)$/.exec(text);
  if (!m) return null;
  return `${m[1]}|${m[2]}`;
}

export interface TreeNode {
  label: string;
  children: TreeNode[];
  // indexes into the path list for paths that END at this node
  leafPaths: number[];
}

/** Prefix tree over path feature lists; shared prefixes become one node. */
export function buildPrefixTree(paths: string[][]): TreeNode {
  const root: TreeNode = { label: "", children: [], leafPaths: [] };
  paths.forEach((features, index) => {
    let node = root;
    for (const feature of features) {
      let child = node.children.find((c) => c.label === feature);
      if (!child) {
        child = { label: feature, children: [], leafPaths: [] };
        node.children.push(child);
      }
      node = child;
    }
    node.leafPaths.push(index);
  });
  return root;
}
