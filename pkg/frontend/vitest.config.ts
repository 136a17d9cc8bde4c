import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // the full-backbone contract test pushes ten 224x224 images through
    // all eighteen layers twice; give it room
    testTimeout: 300_000,
    hookTimeout: 60_000,
  },
});
