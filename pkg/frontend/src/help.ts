// Inline guidance shown under each label choice, per item kind.

const INGREDIENT_HELP: Record<string, string> = {
  Found: 'The exact same wording appears in the document (plural forms count).',
  'Found (not perfect)':
    'Not word-for-word, but clearly the same ingredient (e.g. a more specific variety).',
  'Not found': 'The ingredient does not appear in the document at all.',
  Implied:
    'Missing from the ingredient list but used in the steps (common for salt or pepper). ' +
    'You can also upgrade Not found picks during the document review.',
}

const TASK_HELP: Record<string, string> = {
  'Task Found': 'The same action appears in the document.',
  'Task Found (Not Exact Wording)': 'The action appears with different wording.',
  'Task Found (Wrong Context)':
    'The action appears, but applied to something else; check surrounding steps.',
  'Task Not Found':
    'The action is absent. Its tool and ingredient fields will be skipped automatically.',
}

const TOOL_HELP: Record<string, string> = {
  Found: 'The same tool is used for the matching step.',
  'Found (Not Exact)': 'A similar tool is used (e.g. a frying pan vs. a large frying pan).',
  'Not Found': 'The tool is absent or a completely different tool is used.',
  'Tool Implied': 'Not mentioned, but the step obviously requires it.',
  'No Tool Involved': 'There is no tool to compare for this step.',
}

const INGREDIENT_LIST_HELP: Record<string, string> = {
  'Ingredients Match': "The step's ingredients correspond to the document's step.",
  'Most Ingredients Match': 'More than half of the ingredients correspond.',
  'Some Ingredients Match': 'Less than half of the ingredients correspond.',
  'No Ingredients Match': 'None of the ingredients correspond.',
  'Ingredients Implied': 'Not spelled out, but clearly implied (e.g. "season").',
  'No Ingredients Used': 'The step uses no ingredients.',
}

const BY_KIND: Record<string, Record<string, string>> = {
  Ingredient: INGREDIENT_HELP,
  TaskName: TASK_HELP,
  Tool: TOOL_HELP,
  IngredientList: INGREDIENT_LIST_HELP,
}

export function labelHelp(itemKind: string, label: string): string {
  return BY_KIND[itemKind]?.[label] ?? ''
}

export const KIND_TITLES: Record<string, string> = {
  Ingredient: 'Ingredient',
  TaskName: 'Task',
  Tool: 'Tool(s)',
  IngredientList: 'Ingredients involved in the task',
}
