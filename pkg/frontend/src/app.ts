// Annotator application: a guided queue over the pending-item API.
//
// Screens: login -> item -> (document review on document change) -> done.
// Every stored record comes from an explicit user selection; the UI never
// picks a label on its own.

import {
  ApiClient,
  ConflictError,
  PendingItem,
  Progress,
  RecordPayload,
} from './api.js'
import { KIND_TITLES, labelHelp } from './help.js'

interface SubmittedItem {
  payload: RecordPayload
  itemText: string
}

export class AnnotatorApp {
  annotator = ''
  current: PendingItem | null = null
  progress: Progress | null = null
  // Labels submitted for the document currently open, for the review pass.
  documentLog: SubmittedItem[] = []
  openDocument: string | null = null
  openRecipe: string | null = null
  private submitting = false

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {}

  start(): void {
    this.renderLogin()
  }

  // -- screens ---------------------------------------------------------

  private clear(): HTMLElement {
    this.root.innerHTML = ''
    return this.root
  }

  private renderLogin(): void {
    const root = this.clear()
    const box = el('div', 'login card')
    box.append(el('h1', '', 'Recipe annotation'))
    box.append(
      el('p', '', 'Enter your annotator id to load your next pending item.'),
    )
    const input = document.createElement('input')
    input.id = 'annotator-input'
    input.placeholder = 'annotator id'
    const button = el('button', 'primary', 'Start') as HTMLButtonElement
    button.id = 'start-button'
    button.addEventListener('click', () => {
      if (input.value.trim()) {
        this.annotator = input.value.trim()
        void this.loadNext()
      }
    })
    box.append(input, button)
    root.append(box)
  }

  async loadNext(): Promise<void> {
    try {
      const response = await this.api.fetchPending(this.annotator)
      this.progress = response.progress
      const next = response.item
      if (this.openDocument && (!next || next.document_id !== this.openDocument)) {
        // The just-finished document gets its review pass before moving on.
        this.renderDocumentReview(next)
        return
      }
      if (!next) {
        this.renderDone()
        return
      }
      this.current = next
      if (next.document_id !== this.openDocument) {
        this.openDocument = next.document_id
        this.openRecipe = next.recipe
        this.documentLog = []
      }
      this.renderItem(next)
    } catch (error) {
      this.renderError(error, () => void this.loadNext())
    }
  }

  private renderItem(item: PendingItem): void {
    const root = this.clear()
    root.append(this.progressBar())

    const card = el('div', 'card item-card')
    card.append(el('h2', '', `${item.recipe} — ${KIND_TITLES[item.item_kind] ?? item.item_kind}`))

    const link = document.createElement('a')
    link.href = item.document_url
    link.target = '_blank'
    link.rel = 'noopener'
    link.id = 'document-link'
    link.textContent = `Open document ${item.document_id}`
    card.append(link)

    const itemBox = el('div', 'item-text')
    itemBox.id = 'item-text'
    itemBox.textContent = item.item_text || '(empty)'
    card.append(el('p', 'prompt-line', 'Can you find this in the document?'), itemBox)

    const select = document.createElement('select')
    select.id = 'label-select'
    const placeholder = document.createElement('option')
    placeholder.value = ''
    placeholder.textContent = 'choose a label…'
    select.append(placeholder)
    for (const label of item.allowed_labels) {
      const option = document.createElement('option')
      option.value = label
      option.textContent = label
      select.append(option)
    }
    const help = el('p', 'label-help')
    help.id = 'label-help'
    select.addEventListener('change', () => {
      help.textContent = labelHelp(item.item_kind, select.value)
    })
    card.append(select, help)

    const submit = el('button', 'primary', 'Submit') as HTMLButtonElement
    submit.id = 'submit-button'
    submit.addEventListener('click', () => void this.submitLabel(select.value))
    card.append(submit)

    const notice = el('div', 'notice')
    notice.id = 'notice'
    notice.textContent = this.lastNotice
    this.lastNotice = ''
    card.append(notice)

    root.append(card)
    root.append(this.contextPanel(item))
  }

  private contextPanel(item: PendingItem): HTMLElement {
    const panel = el('details', 'context card')
    panel.append(el('summary', '', 'Generated recipe context'))
    const ingredients = el('div')
    ingredients.append(el('h3', '', 'Ingredients'))
    const ingredientList = document.createElement('ul')
    ingredientList.id = 'generated-ingredients'
    for (const name of item.generated_ingredients) {
      ingredientList.append(el('li', '', name))
    }
    ingredients.append(ingredientList)
    const tasks = el('div')
    tasks.append(el('h3', '', 'Tasks'))
    const taskList = document.createElement('ol')
    taskList.id = 'generated-tasks'
    for (const line of item.generated_tasks) {
      taskList.append(el('li', '', line))
    }
    tasks.append(taskList)
    panel.append(ingredients, tasks)
    return panel
  }

  async submitLabel(label: string): Promise<void> {
    if (!this.current || !label || this.submitting) return
    const item = this.current
    const payload: RecordPayload = {
      annotator: this.annotator,
      recipe: item.recipe,
      document_id: item.document_id,
      item_kind: item.item_kind,
      item_ordinal: item.item_ordinal,
      label,
    }
    this.submitting = true
    const button = this.root.querySelector<HTMLButtonElement>('#submit-button')
    if (button) button.disabled = true
    try {
      const result = await this.api.submitRecord(payload)
      this.documentLog.push({ payload, itemText: item.item_text })
      if (result.auto_resolved.length > 0) {
        const skipped = result.auto_resolved
          .map((r) => KIND_TITLES[r.item_kind] ?? r.item_kind)
          .join(' and ')
        this.flash(`Skipped ${result.auto_resolved.length} dependent fields: ${skipped}`)
      }
      this.current = null
      await this.loadNext()
    } catch (error) {
      this.renderError(error, () => this.renderItem(item))
    } finally {
      this.submitting = false
    }
  }

  // -- review pass --------------------------------------------------------

  private renderDocumentReview(next: PendingItem | null): void {
    const root = this.clear()
    root.append(this.progressBar())
    const card = el('div', 'card review-card')
    card.append(el('h2', '', 'Document finished — review pass'))
    card.append(
      el(
        'p',
        '',
        'Before closing this document, check your "Not found" ingredients: if one is used in the steps, mark it Implied.',
      ),
    )
    const list = el('div')
    list.id = 'review-list'
    const candidates = this.documentLog.filter(
      (entry) =>
        entry.payload.item_kind === 'Ingredient' &&
        entry.payload.label === 'Not found',
    )
    if (candidates.length === 0) {
      list.append(el('p', '', 'No "Not found" ingredients to review.'))
    }
    for (const entry of candidates) {
      const row = el('div', 'review-row')
      row.append(el('span', '', entry.itemText))
      const upgrade = el('button', '', 'Mark Implied') as HTMLButtonElement
      upgrade.className = 'upgrade-button'
      upgrade.addEventListener('click', () => {
        void (async () => {
          try {
            await this.api.submitRecord({ ...entry.payload, label: 'Implied' })
            entry.payload.label = 'Implied'
            upgrade.disabled = true
            upgrade.textContent = 'Implied ✓'
          } catch (error) {
            this.renderError(error, () => this.renderDocumentReview(next))
          }
        })()
      })
      row.append(upgrade)
      list.append(row)
    }
    card.append(list)

    const close = el('button', 'primary', 'Close document & continue') as HTMLButtonElement
    close.id = 'close-document-button'
    close.addEventListener('click', () => {
      void (async () => {
        try {
          await this.api.closeDocument(
            this.annotator,
            this.openRecipe ?? '',
            this.openDocument ?? '',
          )
          this.openDocument = null
          this.openRecipe = null
          this.documentLog = []
          await this.loadNext()
        } catch (error) {
          this.renderError(error, () => this.renderDocumentReview(next))
        }
      })()
    })
    card.append(close)
    root.append(card)
  }

  // -- terminal screens -----------------------------------------------------

  private renderDone(): void {
    const root = this.clear()
    const card = el('div', 'card done-card')
    card.append(el('h2', '', 'All done'))
    card.id = 'done-screen'
    if (this.progress) {
      card.append(
        el(
          'p',
          '',
          `You answered ${this.progress.recorded} items; ` +
            `${this.progress.auto_resolved} were skipped automatically.`,
        ),
      )
    }
    root.append(card)
  }

  private renderError(error: unknown, retry: () => void): void {
    const root = this.clear()
    const banner = el('div', 'card error-banner')
    banner.id = 'error-banner'
    const message =
      error instanceof ConflictError
        ? `This item was already recorded as "${error.existing?.label ?? '?'}".`
        : `Could not reach the annotation service: ${String(error)}`
    banner.append(el('h2', '', 'Something went wrong'), el('p', '', message))
    const button = el('button', 'primary', 'Retry') as HTMLButtonElement
    button.id = 'retry-button'
    button.addEventListener('click', retry)
    banner.append(button)
    root.append(banner)
  }

  private progressBar(): HTMLElement {
    const bar = el('div', 'progress-bar')
    bar.id = 'progress-bar'
    if (this.progress) {
      const done = this.progress.recorded + this.progress.auto_resolved
      bar.textContent = `${done} / ${this.progress.total} items`
    }
    return bar
  }

  private flash(text: string): void {
    // Shown on the next render; also kept on a field tests can read.
    this.lastNotice = text
  }

  lastNotice = ''
}

function el(tag: string, className = '', text = ''): HTMLElement {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text) node.textContent = text
  return node
}
