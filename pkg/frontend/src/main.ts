import { ApiClient } from './api.js'
import { AnnotatorApp } from './app.js'

const root = document.getElementById('app')
if (root) {
  new AnnotatorApp(root, new ApiClient()).start()
}
