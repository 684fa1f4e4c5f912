import { ApiClient } from './client';
import { App } from './app';
import { bindToLocation, deserializeState, Store } from './state';

// Browser entry point. The bundle is served by the analysis service itself,
// so the API lives on the same origin.

const root = document.getElementById('app');
if (!root) throw new Error('missing #app container');

const store = new Store(deserializeState(window.location.hash));
bindToLocation(store, window);

const app = new App(root, new ApiClient(''), store);
void app.start();
