/** Payload shapes of the pipeline session API. */
export {};
