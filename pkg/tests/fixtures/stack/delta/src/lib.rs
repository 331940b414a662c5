// Shared configuration plumbing for the stack.
pub struct Config {
    pub endpoint: String,
    pub retries: u32,
}

impl Config {
    /* retries are capped to keep restarts bounded */
    pub fn capped_retries(&self) -> u32 {
        self.retries.min(8)
    }
    pub fn endpoint_with_port(&self, port: u16) -> String {
        format!("{}:{}", self.endpoint, port)
    }
}
pub const DEFAULT_RETRIES: u32 = 3;
pub const DEFAULT_PORT: u16 = 8080;
