/* a
b */
int x;
